#include "mdopf/feeder_io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>

#include "mdopf/csv.hpp"
#include "mdopf/errors.hpp"
#include "mdopf/load_models.hpp"

namespace mdopf::io {

using nlohmann::json;

Complex impedance_to_pu(Complex z_ohm, double sbase_kva, double vbase_kv) {
    return z_ohm * sbase_kva / (1000.0 * vbase_kv * vbase_kv);
}

Complex impedance_to_ohm(Complex z_pu, double sbase_kva, double vbase_kv) {
    return z_pu * (1000.0 * vbase_kv * vbase_kv) / sbase_kva;
}

Complex admittance_to_pu(Complex y_s, double sbase_kva, double vbase_kv) {
    return y_s * (1000.0 * vbase_kv * vbase_kv) / sbase_kva;
}

Complex admittance_to_siemens(Complex y_pu, double sbase_kva, double vbase_kv) {
    return y_pu * sbase_kva / (1000.0 * vbase_kv * vbase_kv);
}

namespace {

// JSON node paired with its path for error messages.
struct Node {
    const json& value;
    std::string path;

    bool has(const std::string& key) const { return value.is_object() && value.contains(key); }

    Node at(const std::string& key) const {
        if (!value.is_object()) throw ParseError(path, "expected an object");
        auto it = value.find(key);
        if (it == value.end()) throw ParseError(path + "/" + key, "missing key");
        return {*it, path + "/" + key};
    }

    Node at(std::size_t i) const { return {value.at(i), path + "/" + std::to_string(i)}; }

    std::size_t array_size(std::optional<std::size_t> expected = std::nullopt) const {
        if (!value.is_array()) throw ParseError(path, "expected an array");
        if (expected && value.size() != *expected)
            throw ParseError(path, "expected " + std::to_string(*expected) + " entries, got " +
                                       std::to_string(value.size()));
        return value.size();
    }

    double number() const {
        if (!value.is_number()) throw ParseError(path, "expected a number");
        return value.get<double>();
    }

    std::string string() const {
        if (value.is_string()) return value.get<std::string>();
        if (value.is_number_integer()) return std::to_string(value.get<long long>());
        throw ParseError(path, "expected a string");
    }

    Complex complex() const {
        array_size(2);
        return {at(0).number(), at(1).number()};
    }

    Vec3c complex3() const {
        array_size(3);
        Vec3c v;
        for (std::size_t i = 0; i < 3; ++i) v(static_cast<Eigen::Index>(i)) = at(i).complex();
        return v;
    }

    Mat3c matrix3() const {
        array_size(3);
        Mat3c m;
        for (std::size_t r = 0; r < 3; ++r) {
            Node row = at(r);
            row.array_size(3);
            for (std::size_t c = 0; c < 3; ++c)
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row.at(c).complex();
        }
        return m;
    }

    PhaseSet phases() const {
        PhaseSet s;
        const std::size_t n = array_size();
        for (std::size_t i = 0; i < n; ++i) {
            Node p = at(i);
            auto ph = parse_phase(p.string());
            if (!ph) throw ParseError(p.path, "unknown phase '" + p.string() + "'");
            if (s.contains(*ph)) throw ParseError(p.path, "duplicate phase");
            s.insert(*ph);
        }
        return s;
    }

    // Scalar applies to the given phases; array gives all three slots.
    Vec3 per_phase(PhaseSet phases) const {
        Vec3 v = Vec3::Zero();
        if (value.is_number()) {
            for (int p = 0; p < 3; ++p)
                if (phases.contains(p)) v(p) = number();
            return v;
        }
        array_size(3);
        for (std::size_t i = 0; i < 3; ++i) v(static_cast<Eigen::Index>(i)) = at(i).number();
        return v;
    }
};

enum class Units { none, physical, per_unit };

// Tracks the unit family of one element; mixing is a UnitError.
class UnitGuard {
public:
    UnitGuard(std::string element_path) : path_(std::move(element_path)) {}

    void note(Units u, const std::string& key) {
        if (units_ != Units::none && units_ != u)
            throw UnitError(path_ + ": key '" + key + "' mixes physical and per-unit quantities");
        units_ = u;
    }

private:
    std::string path_;
    Units units_ = Units::none;
};

struct Bases {
    double sbase_kva = 1.0;
    std::optional<double> vbase_global;
    std::map<std::string, double> vbase_bus;

    double vbase(const std::string& bus, const std::string& path) const {
        if (auto it = vbase_bus.find(bus); it != vbase_bus.end()) return it->second;
        if (vbase_global) return *vbase_global;
        throw ParseError(path, "no voltage base for bus '" + bus + "'");
    }
};

enum class Quantity { impedance, admittance };

// Reads `<stem>_ohm`/`<stem>_s` or `<stem>_pu`. Returns nullopt when neither exists.
std::optional<Mat3c> read_matrix(const Node& element, const std::string& stem, Quantity q, UnitGuard& guard,
                                 const Bases& bases, const std::string& bus) {
    const std::string physical_key = stem + (q == Quantity::impedance ? "_ohm" : "_s");
    const std::string pu_key = stem + "_pu";
    const bool has_phys = element.has(physical_key);
    const bool has_pu = element.has(pu_key);
    if (has_phys && has_pu)
        throw UnitError(element.path + ": both '" + physical_key + "' and '" + pu_key + "' given");
    if (has_pu) {
        guard.note(Units::per_unit, pu_key);
        return element.at(pu_key).matrix3();
    }
    if (has_phys) {
        guard.note(Units::physical, physical_key);
        Node node = element.at(physical_key);
        Mat3c m = node.matrix3();
        const double vb = bases.vbase(bus, node.path);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                m(r, c) = q == Quantity::impedance ? impedance_to_pu(m(r, c), bases.sbase_kva, vb)
                                                   : admittance_to_pu(m(r, c), bases.sbase_kva, vb);
        return m;
    }
    return std::nullopt;
}

Configuration parse_configuration(const Node& n) {
    const auto s = n.string();
    if (s == "wye") return Configuration::wye;
    if (s == "delta") return Configuration::delta;
    throw ParseError(n.path, "configuration must be 'wye' or 'delta'");
}

LoadModel parse_model(const Node& n) {
    const auto s = n.string();
    if (s == "constant_power") return LoadModel::constant_power;
    if (s == "exponential") return LoadModel::exponential;
    throw ParseError(n.path, "model must be 'constant_power' or 'exponential'");
}

} // namespace

Network parse_feeder(const json& doc) {
    const Node root{doc, ""};
    Network net;
    Bases bases;
    bases.sbase_kva = root.at("sbase_kva").number();
    if (!(bases.sbase_kva > 0.0)) throw ParseError("/sbase_kva", "must be positive");
    net.sbase_kva = bases.sbase_kva;
    {
        Node vb = root.at("vbase_kv");
        if (vb.value.is_number()) {
            bases.vbase_global = vb.number();
            if (!(*bases.vbase_global > 0.0)) throw ParseError(vb.path, "must be positive");
        } else if (vb.value.is_object()) {
            for (auto it = vb.value.begin(); it != vb.value.end(); ++it) {
                Node entry{it.value(), vb.path + "/" + it.key()};
                const double v = entry.number();
                if (!(v > 0.0)) throw ParseError(entry.path, "must be positive");
                bases.vbase_bus[it.key()] = v;
            }
        } else {
            throw ParseError(vb.path, "expected a number or a per-bus object");
        }
    }

    Node buses = root.at("buses");
    for (std::size_t i = 0, n = buses.array_size(); i < n; ++i) {
        Node b = buses.at(i);
        Bus bus;
        bus.id = b.at("id").string();
        bus.phases = b.at("phases").phases();
        if (b.has("vmin_pu")) bus.vmin = b.at("vmin_pu").per_phase(PhaseSet::all());
        if (b.has("vmax_pu")) bus.vmax = b.at("vmax_pu").per_phase(PhaseSet::all());
        net.buses.push_back(std::move(bus));
    }

    Node source = root.at("source");
    net.root = source.at("bus").string();
    {
        const Vec3c vref = source.at("vref_pu").complex3();
        bool found = false;
        for (auto& bus : net.buses) {
            if (bus.id != net.root) continue;
            bus.is_slack = true;
            bus.vref = vref;
            found = true;
        }
        if (!found) throw ParseError(source.path + "/bus", "unknown bus '" + net.root + "'");
    }

    Node lines = root.at("lines");
    for (std::size_t i = 0, n = lines.array_size(); i < n; ++i) {
        Node l = lines.at(i);
        Line line;
        line.id = l.at("id").string();
        line.from_bus = l.at("from_bus").string();
        line.to_bus = l.at("to_bus").string();
        line.phases = l.at("phases").phases();
        UnitGuard guard(l.path);
        auto z = read_matrix(l, "z", Quantity::impedance, guard, bases, line.from_bus);
        if (!z) throw ParseError(l.path, "missing key 'z_ohm' or 'z_pu'");
        line.z_series = *z;
        if (auto y = read_matrix(l, "ysh_from", Quantity::admittance, guard, bases, line.from_bus)) line.ysh_from = *y;
        if (auto y = read_matrix(l, "ysh_to", Quantity::admittance, guard, bases, line.to_bus)) line.ysh_to = *y;
        net.lines.push_back(std::move(line));
    }

    Node loads = root.at("loads");
    for (std::size_t i = 0, n = loads.array_size(); i < n; ++i) {
        Node l = loads.at(i);
        LoadSpec load;
        load.id = l.at("id").string();
        load.bus = l.at("bus").string();
        load.configuration = parse_configuration(l.at("configuration"));
        load.phases = l.at("phases").phases();
        load.model = l.has("model") ? parse_model(l.at("model")) : LoadModel::constant_power;
        UnitGuard guard(l.path);
        if (l.has("s0_pu") && l.has("s0_kva")) throw UnitError(l.path + ": both 's0_pu' and 's0_kva' given");
        if (l.has("s0_pu")) {
            guard.note(Units::per_unit, "s0_pu");
            load.s0 = l.at("s0_pu").complex3();
        } else {
            guard.note(Units::physical, "s0_kva");
            load.s0 = l.at("s0_kva").complex3() / bases.sbase_kva;
        }
        // Delta branches see the line-to-line voltage, sqrt(3) in phase-to-neutral p.u.
        const double default_v0 = load.configuration == Configuration::delta ? std::numbers::sqrt3 : 1.0;
        load.v0mag = Vec3::Constant(default_v0);
        if (l.has("v0_pu")) {
            const Vec3 given = l.at("v0_pu").per_phase(load.phases);
            for (int p = 0; p < 3; ++p)
                if (load.phases.contains(p)) load.v0mag(p) = given(p);
        }
        if (l.has("alpha")) load.alpha = l.at("alpha").per_phase(load.phases);
        if (l.has("beta")) load.beta = l.at("beta").per_phase(load.phases);
        net.loads.push_back(std::move(load));
    }

    Node shunts = root.at("shunts");
    for (std::size_t i = 0, n = shunts.array_size(); i < n; ++i) {
        Node s = shunts.at(i);
        ShuntDevice shunt;
        shunt.id = s.at("id").string();
        shunt.bus = s.at("bus").string();
        UnitGuard guard(s.path);
        auto y = read_matrix(s, "y", Quantity::admittance, guard, bases, shunt.bus);
        if (!y) throw ParseError(s.path, "missing key 'y_s' or 'y_pu'");
        shunt.y = *y;
        net.shunts.push_back(std::move(shunt));
    }

    if (root.has("generators")) {
        Node gens = root.at("generators");
        for (std::size_t i = 0, n = gens.array_size(); i < n; ++i) {
            Node g = gens.at(i);
            net.generators.push_back({g.at("id").string(), g.at("bus").string(), g.at("phases").phases()});
        }
    }

    if (auto report = validate(net); !report.ok()) throw ValidationError(std::move(report));
    return net;
}

Network parse_feeder(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open feeder file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("", std::string("malformed JSON: ") + e.what());
    }
    return parse_feeder(doc);
}

namespace {

json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

json vec_json(const Vec3c& v) { return json::array({complex_json(v(0)), complex_json(v(1)), complex_json(v(2))}); }

json vec_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

json mat_json(const Mat3c& m) {
    json rows = json::array();
    for (int r = 0; r < 3; ++r) rows.push_back(json::array({complex_json(m(r, 0)), complex_json(m(r, 1)), complex_json(m(r, 2))}));
    return rows;
}

json phases_json(PhaseSet s) {
    json out = json::array();
    for (Phase p : kAllPhases)
        if (s.contains(p)) out.push_back(std::string(1, phase_name(p)));
    return out;
}

} // namespace

json to_json(const Network& net) {
    json doc;
    doc["sbase_kva"] = net.sbase_kva;
    doc["vbase_kv"] = 1.0;
    doc["buses"] = json::array();
    for (const auto& b : net.buses)
        doc["buses"].push_back(
            {{"id", b.id}, {"phases", phases_json(b.phases)}, {"vmin_pu", vec_json(b.vmin)}, {"vmax_pu", vec_json(b.vmax)}});
    doc["lines"] = json::array();
    for (const auto& l : net.lines)
        doc["lines"].push_back({{"id", l.id},
                                {"from_bus", l.from_bus},
                                {"to_bus", l.to_bus},
                                {"phases", phases_json(l.phases)},
                                {"z_pu", mat_json(l.z_series)},
                                {"ysh_from_pu", mat_json(l.ysh_from)},
                                {"ysh_to_pu", mat_json(l.ysh_to)}});
    doc["loads"] = json::array();
    for (const auto& l : net.loads)
        doc["loads"].push_back({{"id", l.id},
                                {"bus", l.bus},
                                {"configuration", l.configuration == Configuration::wye ? "wye" : "delta"},
                                {"phases", phases_json(l.phases)},
                                {"model", l.model == LoadModel::constant_power ? "constant_power" : "exponential"},
                                {"s0_pu", vec_json(l.s0)},
                                {"v0_pu", vec_json(l.v0mag)},
                                {"alpha", vec_json(l.alpha)},
                                {"beta", vec_json(l.beta)}});
    doc["shunts"] = json::array();
    for (const auto& s : net.shunts) doc["shunts"].push_back({{"id", s.id}, {"bus", s.bus}, {"y_pu", mat_json(s.y)}});
    if (!net.generators.empty()) {
        doc["generators"] = json::array();
        for (const auto& g : net.generators)
            doc["generators"].push_back({{"id", g.id}, {"bus", g.bus}, {"phases", phases_json(g.phases)}});
    }
    doc["source"] = {{"bus", net.root}, {"vref_pu", vec_json(net.bus(net.root).vref.value_or(Vec3c::Zero()))}};
    return doc;
}

void write_feeder(const Network& network, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << to_json(network).dump(2) << '\n';
    if (!out) throw IoError("write to '" + path + "' failed");
}

namespace {

void write_load_rows(csv::Writer& out, const Network& net, const std::vector<Vec3c>& sd, const std::vector<Vec3c>& sb) {
    out.row({"load", "phase", "pd_pu", "qd_pu", "pb_pu", "qb_pu"});
    for (std::size_t l = 0; l < net.loads.size(); ++l) {
        const auto& load = net.loads[l];
        const PhaseSet shown = load.phases | load_footprint(load);
        for (Phase p : kAllPhases) {
            if (!shown.contains(p)) continue;
            const int k = index(p);
            out.row({load.id, std::string(1, phase_name(p)), csv::fixed(sd[l](k).real()), csv::fixed(sd[l](k).imag()),
                     csv::fixed(sb[l](k).real()), csv::fixed(sb[l](k).imag())});
        }
    }
}

} // namespace

void write_solution_csv(const lp::LinearSolution& sol, const Network& net, const std::string& path) {
    csv::Writer out(path);
    out.row({"bus", "phase", "vm_pu", "va_deg", "w_pu"});
    for (std::size_t b = 0; b < net.buses.size(); ++b) {
        for (Phase p : kAllPhases) {
            if (!net.buses[b].phases.contains(p)) continue;
            const double w = sol.w[b](index(p), index(p)).real();
            out.row({net.buses[b].id, std::string(1, phase_name(p)), csv::fixed(std::sqrt(std::max(w, 0.0))), "",
                     csv::fixed(w)});
        }
    }
    write_load_rows(out, net, sol.sd, sol.sb);
    out.close();
}

void write_solution_csv(const ac::PhasorState& state, const Network& net, const std::string& path) {
    csv::Writer out(path);
    out.row({"bus", "phase", "vm_pu", "va_deg", "w_pu"});
    for (std::size_t b = 0; b < net.buses.size(); ++b) {
        for (Phase p : kAllPhases) {
            if (!net.buses[b].phases.contains(p)) continue;
            const Complex v = state.v[b](index(p));
            out.row({net.buses[b].id, std::string(1, phase_name(p)), csv::fixed(std::abs(v)),
                     csv::fixed(std::arg(v) * 180.0 / std::numbers::pi), csv::fixed(std::norm(v))});
        }
    }
    write_load_rows(out, net, state.sd, state.sb);
    out.close();
}

} // namespace mdopf::io
