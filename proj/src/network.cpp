#include "mdopf/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

namespace mdopf {

std::optional<std::size_t> Network::bus_index(const std::string& id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return i;
    return std::nullopt;
}

const Bus& Network::bus(const std::string& id) const {
    auto idx = bus_index(id);
    if (!idx) throw InputError("unknown bus '" + id + "'");
    return buses[*idx];
}

std::size_t Network::root_index() const {
    auto idx = bus_index(root);
    if (!idx) throw InputError("root bus '" + root + "' not found");
    return *idx;
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    for (const auto& v : violations) os << v.element_id << ": " << v.message << '\n';
    return os.str();
}

ValidationError::ValidationError(ValidationReport report)
    : InputError("network validation failed:\n" + report.to_string()), report_(std::move(report)) {}

PhaseSet load_footprint(const LoadSpec& load) {
    if (load.configuration == Configuration::wye) return load.phases;
    PhaseSet out;
    for (Phase p : kAllPhases) {
        if (!load.phases.contains(p)) continue;
        out.insert(p);
        out.insert(successor(p));
    }
    return out;
}

namespace {

bool zero_outside(const Mat3c& m, PhaseSet phases) {
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            if ((!phases.contains(r) || !phases.contains(c)) && m(r, c) != Complex{}) return false;
    return true;
}

bool zero_outside(const Vec3c& v, PhaseSet phases) {
    for (int r = 0; r < 3; ++r)
        if (!phases.contains(r) && v(r) != Complex{}) return false;
    return true;
}

bool zero_outside(const Vec3& v, PhaseSet phases) {
    for (int r = 0; r < 3; ++r)
        if (!phases.contains(r) && v(r) != 0.0) return false;
    return true;
}

bool all_finite(const Mat3c& m) {
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            if (!std::isfinite(m(r, c).real()) || !std::isfinite(m(r, c).imag())) return false;
    return true;
}

bool restricted_invertible(const Mat3c& z, PhaseSet phases) {
    std::vector<int> idx;
    for (int p = 0; p < 3; ++p)
        if (phases.contains(p)) idx.push_back(p);
    if (idx.empty()) return false;
    Eigen::MatrixXcd sub(idx.size(), idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < idx.size(); ++c) sub(r, c) = z(idx[r], idx[c]);
    return sub.fullPivLu().isInvertible();
}

template <class T>
void check_unique_ids(const std::vector<T>& items, const char* kind, ValidationReport& report) {
    std::set<std::string> seen;
    for (const auto& item : items)
        if (!seen.insert(item.id).second)
            report.violations.push_back({item.id, std::string("duplicate ") + kind + " id"});
}

// Adjacency by bus index: (neighbour, line index).
std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency(const Network& net) {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(net.buses.size());
    for (std::size_t e = 0; e < net.lines.size(); ++e) {
        auto f = net.bus_index(net.lines[e].from_bus);
        auto t = net.bus_index(net.lines[e].to_bus);
        if (!f || !t) continue;
        adj[*f].emplace_back(*t, e);
        adj[*t].emplace_back(*f, e);
    }
    return adj;
}

} // namespace

ValidationReport validate(const Network& net) {
    ValidationReport report;
    auto add = [&report](const std::string& id, std::string msg) {
        report.violations.push_back({id, std::move(msg)});
    };

    if (net.buses.empty()) {
        add("<network>", "network has no buses");
        return report;
    }
    check_unique_ids(net.buses, "bus", report);
    check_unique_ids(net.lines, "line", report);
    check_unique_ids(net.loads, "load", report);
    check_unique_ids(net.shunts, "shunt", report);

    int slack_count = 0;
    for (const auto& b : net.buses) {
        if (b.phases.empty()) add(b.id, "bus has no phases");
        for (int p = 0; p < 3; ++p) {
            if (!b.phases.contains(p)) continue;
            if (!(b.vmin(p) <= b.vmax(p)))
                add(b.id, std::string("vmin > vmax on phase ") + phase_name(phase_at(p)));
        }
        if (b.is_slack) {
            ++slack_count;
            if (!b.vref) add(b.id, "slack bus has no reference voltage");
            else if (!zero_outside(*b.vref, b.phases)) add(b.id, "reference voltage nonzero on absent phase");
            if (b.id != net.root) add(b.id, "slack bus is not the network root '" + net.root + "'");
        } else if (b.vref) {
            add(b.id, "reference voltage given on a non-slack bus");
        }
    }
    if (slack_count != 1)
        add("<network>", "expected exactly one slack bus, found " + std::to_string(slack_count));
    const auto root = net.bus_index(net.root);
    if (!root) add("<network>", "root bus '" + net.root + "' not found");

    for (const auto& l : net.lines) {
        auto f = net.bus_index(l.from_bus);
        auto t = net.bus_index(l.to_bus);
        if (!f) add(l.id, "unknown from bus '" + l.from_bus + "'");
        if (!t) add(l.id, "unknown to bus '" + l.to_bus + "'");
        if (l.from_bus == l.to_bus) add(l.id, "line connects a bus to itself");
        if (l.phases.empty()) add(l.id, "line has no phases");
        if (f && !l.phases.is_subset_of(net.buses[*f].phases))
            add(l.id, "line phases " + l.phases.to_string() + " not present at bus '" + l.from_bus + "'");
        if (t && !l.phases.is_subset_of(net.buses[*t].phases))
            add(l.id, "line phases " + l.phases.to_string() + " not present at bus '" + l.to_bus + "'");
        if (!all_finite(l.z_series) || !all_finite(l.ysh_from) || !all_finite(l.ysh_to))
            add(l.id, "non-finite impedance or admittance");
        if (!zero_outside(l.z_series, l.phases)) add(l.id, "series impedance nonzero on absent phase");
        if (!zero_outside(l.ysh_from, l.phases) || !zero_outside(l.ysh_to, l.phases))
            add(l.id, "shunt admittance nonzero on absent phase");
        if (!l.phases.empty() && !restricted_invertible(l.z_series, l.phases))
            add(l.id, "series impedance is singular on the line phases");
    }

    // Tree structure.
    if (net.lines.empty()) {
        add("<network>", "root has no line: a network needs at least two buses");
    } else if (root) {
        auto adj = adjacency(net);
        std::vector<bool> seen(net.buses.size(), false);
        std::deque<std::size_t> queue{*root};
        seen[*root] = true;
        std::size_t reached = 1;
        while (!queue.empty()) {
            auto u = queue.front();
            queue.pop_front();
            for (auto [v, e] : adj[u]) {
                if (seen[v]) continue;
                seen[v] = true;
                ++reached;
                queue.push_back(v);
            }
        }
        bool is_tree = reached == net.buses.size() && net.lines.size() + 1 == net.buses.size();
        if (!is_tree) {
            add("<network>", "disconnected / not a tree: " + std::to_string(net.buses.size()) + " buses, " +
                                 std::to_string(net.lines.size()) + " lines, " + std::to_string(reached) +
                                 " reachable from root");
        } else {
            auto tree = orient_toward_root(net);
            for (std::size_t i = 0; i < net.buses.size(); ++i) {
                if (i == *root) continue;
                const auto& line = net.lines[tree.parent_line[i]];
                if (!(line.phases == net.buses[i].phases))
                    add(net.buses[i].id, "bus phases " + net.buses[i].phases.to_string() +
                                             " differ from phases " + line.phases.to_string() +
                                             " of its supply line '" + line.id + "'");
            }
        }
    }

    for (const auto& s : net.shunts) {
        auto b = net.bus_index(s.bus);
        if (!b) {
            add(s.id, "unknown bus '" + s.bus + "'");
            continue;
        }
        if (!all_finite(s.y)) add(s.id, "non-finite admittance");
        if (!zero_outside(s.y, net.buses[*b].phases)) add(s.id, "admittance nonzero on phase absent at bus");
    }

    for (const auto& l : net.loads) {
        auto b = net.bus_index(l.bus);
        if (!b) {
            add(l.id, "unknown bus '" + l.bus + "'");
            continue;
        }
        const PhaseSet bus_phases = net.buses[*b].phases;
        if (l.phases.empty()) add(l.id, "load has no phases");
        if (l.configuration == Configuration::wye) {
            if (!l.phases.is_subset_of(bus_phases))
                add(l.id, "load phases " + l.phases.to_string() + " not present at bus '" + l.bus + "'");
        } else {
            for (Phase p : kAllPhases) {
                if (!l.phases.contains(p)) continue;
                PhaseSet need{p, successor(p)};
                if (!need.is_subset_of(bus_phases))
                    add(l.id, std::string("delta branch ") + phase_name(p) + " requires phases " + need.to_string());
            }
        }
        if (!zero_outside(l.s0, l.phases)) add(l.id, "nominal power nonzero on absent phase");
        if (!zero_outside(l.alpha, l.phases) || !zero_outside(l.beta, l.phases))
            add(l.id, "exponent nonzero on absent phase");
        for (int p = 0; p < 3; ++p) {
            if (!l.phases.contains(p)) continue;
            if (!(l.alpha(p) >= 0.0) || !(l.beta(p) >= 0.0)) add(l.id, "exponents must be nonnegative");
            if (!(l.v0mag(p) > 0.0)) add(l.id, "reference voltage magnitude must be positive");
            if (!std::isfinite(l.s0(p).real()) || !std::isfinite(l.s0(p).imag()))
                add(l.id, "non-finite nominal power");
        }
    }

    for (const auto& g : net.generators)
        if (!net.bus_index(g.bus)) add(g.id, "unknown bus '" + g.bus + "'");

    return report;
}

OrientedTree orient_toward_root(const Network& net) {
    const std::size_t n = net.buses.size();
    const std::size_t root = net.root_index();
    auto adj = adjacency(net);

    OrientedTree tree;
    tree.parent.assign(n, OrientedTree::npos);
    tree.parent_line.assign(n, OrientedTree::npos);
    tree.children.assign(n, {});
    tree.position.assign(n, OrientedTree::npos);
    tree.lines.resize(net.lines.size());
    tree.line_child.assign(net.lines.size(), OrientedTree::npos);

    std::vector<bool> used_line(net.lines.size(), false);
    std::deque<std::size_t> queue{root};
    tree.position[root] = 0;
    tree.order.push_back(root);
    while (!queue.empty()) {
        auto u = queue.front();
        queue.pop_front();
        for (auto [v, e] : adj[u]) {
            if (used_line[e]) continue;
            used_line[e] = true;
            if (tree.position[v] != OrientedTree::npos)
                throw CycleDetected("cycle through line '" + net.lines[e].id + "'");
            tree.parent[v] = u;
            tree.parent_line[v] = e;
            tree.children[u].push_back(v);
            tree.position[v] = tree.order.size();
            tree.order.push_back(v);
            tree.line_child[e] = v;

            Line oriented = net.lines[e];
            if (oriented.from_bus != net.buses[u].id) {
                std::swap(oriented.from_bus, oriented.to_bus);
                std::swap(oriented.ysh_from, oriented.ysh_to);
            }
            tree.lines[e] = std::move(oriented);
            queue.push_back(v);
        }
    }
    if (tree.order.size() != n) throw CycleDetected("network is not connected");
    return tree;
}

std::vector<std::string> leaf_buses(const Network& net) {
    std::vector<int> degree(net.buses.size(), 0);
    for (const auto& l : net.lines) {
        if (auto f = net.bus_index(l.from_bus)) ++degree[*f];
        if (auto t = net.bus_index(l.to_bus)) ++degree[*t];
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < net.buses.size(); ++i)
        if (degree[i] == 1 && net.buses[i].id != net.root) out.push_back(net.buses[i].id);
    return out;
}

} // namespace mdopf
