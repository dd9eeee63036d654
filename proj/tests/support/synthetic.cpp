#include "synthetic.hpp"

namespace mdopf::testing {

Bus slack_bus(const std::string& id, const Vec3c& vref) {
    Bus b;
    b.id = id;
    b.phases = PhaseSet::all();
    b.is_slack = true;
    b.vref = vref;
    return b;
}

Bus plain_bus(const std::string& id, PhaseSet phases) {
    Bus b;
    b.id = id;
    b.phases = phases;
    return b;
}

Mat3c diagonal(Complex z, PhaseSet phases) {
    Mat3c m = Mat3c::Zero();
    for (int p = 0; p < 3; ++p)
        if (phases.contains(p)) m(p, p) = z;
    return m;
}

Line make_line(const std::string& id, const std::string& from, const std::string& to, PhaseSet phases,
               const Mat3c& z) {
    Line l;
    l.id = id;
    l.from_bus = from;
    l.to_bus = to;
    l.phases = phases;
    l.z_series = z;
    return l;
}

LoadSpec wye_load(const std::string& id, const std::string& bus, const Vec3c& s0, PhaseSet phases) {
    LoadSpec l;
    l.id = id;
    l.bus = bus;
    l.phases = phases;
    l.s0 = s0;
    return l;
}

LoadSpec delta_load(const std::string& id, const std::string& bus, const Vec3c& s0, PhaseSet branches) {
    LoadSpec l = wye_load(id, bus, s0, branches);
    l.configuration = Configuration::delta;
    l.v0mag = Vec3::Constant(std::numbers::sqrt3);
    return l;
}

LoadSpec exponential(LoadSpec load, double alpha, double beta) {
    load.model = LoadModel::exponential;
    for (int p = 0; p < 3; ++p) {
        load.alpha(p) = load.phases.contains(p) ? alpha : 0.0;
        load.beta(p) = load.phases.contains(p) ? beta : 0.0;
    }
    return load;
}

Network two_bus_empty() {
    Network n;
    n.root = "0";
    n.buses = {slack_bus("0"), plain_bus("1")};
    n.lines = {make_line("L01", "0", "1", PhaseSet::all(), diagonal({0.01, 0.02}))};
    return n;
}

Network two_bus_wye() {
    Network n = two_bus_empty();
    n.loads = {wye_load("LD", "1", Vec3c::Constant(Complex{0.1, 0.05}))};
    return n;
}

Network two_bus_delta(Complex s) {
    Network n = two_bus_empty();
    n.loads = {delta_load("LD", "1", Vec3c(s, 0.0, 0.0), PhaseSet{Phase::a})};
    return n;
}

Network path_three() {
    Network n;
    n.root = "0";
    n.buses = {slack_bus("0"), plain_bus("1"), plain_bus("2")};
    n.lines = {make_line("e01", "0", "1", PhaseSet::all(), diagonal({0.01, 0.02})),
               make_line("e12", "2", "1", PhaseSet::all(), diagonal({0.01, 0.02}))};
    return n;
}

Network star_four() {
    Network n;
    n.root = "0";
    n.buses = {slack_bus("0"), plain_bus("1"), plain_bus("2"), plain_bus("3")};
    for (const char* leaf : {"1", "2", "3"})
        n.lines.push_back(make_line(std::string("e0") + leaf, "0", leaf, PhaseSet::all(), diagonal({0.01, 0.02})));
    return n;
}

namespace {

// Coupled overhead-line impedance in p.u., roughly a few hundred metres of conductor.
Mat3c coupled_z(double scale) {
    Mat3c z;
    z << Complex{0.0100, 0.0293}, Complex{0.0045, 0.0145}, Complex{0.0046, 0.0122},
        Complex{0.0045, 0.0145}, Complex{0.0098, 0.0302}, Complex{0.0044, 0.0111},
        Complex{0.0046, 0.0122}, Complex{0.0044, 0.0111}, Complex{0.0099, 0.0298};
    return z * scale;
}

Mat3c restrict(const Mat3c& m, PhaseSet phases) {
    Mat3c out = Mat3c::Zero();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            if (phases.contains(r) && phases.contains(c)) out(r, c) = m(r, c);
    return out;
}

Mat3c line_charging(double b, PhaseSet phases) {
    Mat3c y = Mat3c::Zero();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            if (phases.contains(r) && phases.contains(c)) y(r, c) = Complex{0.0, r == c ? b : -0.3 * b};
    return y;
}

} // namespace

std::vector<NamedNetwork> small_feeders() {
    std::vector<NamedNetwork> out;
    const PhaseSet abc = PhaseSet::all();
    const PhaseSet ab{Phase::a, Phase::b};
    const PhaseSet bc{Phase::b, Phase::c};
    const PhaseSet c_only{Phase::c};

    out.push_back({"two_bus_empty", two_bus_empty()});
    out.push_back({"two_bus_wye", two_bus_wye()});
    {
        Network n = two_bus_empty();
        n.loads = {wye_load("LA", "1", Vec3c(Complex{0.1, 0.05}, 0.0, 0.0), PhaseSet{Phase::a})};
        n.lines[0].z_series = coupled_z(1.0);
        out.push_back({"two_bus_phase_a", std::move(n)});
    }
    out.push_back({"two_bus_delta_a", two_bus_delta({0.1, 0.0})});
    {
        Network n = two_bus_empty();
        n.lines[0].z_series = coupled_z(1.0);
        n.loads = {exponential(delta_load("D", "1", Vec3c(Complex{0.12, 0.05}, Complex{0.08, 0.04}, Complex{0.1, 0.02})),
                               1.2, 2.6)};
        out.push_back({"two_bus_delta_exp", std::move(n)});
    }
    {
        Network n;
        n.root = "s";
        n.buses = {slack_bus("s", Vec3c(Complex{1.02, 0.0}, std::polar(1.0, -2.2), std::polar(0.98, 2.05))),
                   plain_bus("m"), plain_bus("t")};
        n.lines = {make_line("l1", "s", "m", abc, coupled_z(1.5)), make_line("l2", "t", "m", abc, coupled_z(0.8))};
        n.lines[0].ysh_from = line_charging(2e-3, abc);
        n.lines[0].ysh_to = line_charging(2e-3, abc);
        n.loads = {exponential(wye_load("Y", "m", Vec3c(Complex{0.05, 0.02}, Complex{0.07, 0.03}, Complex{0.04, 0.01})),
                               0.8, 1.7),
                   exponential(delta_load("D", "t", Vec3c(Complex{0.06, 0.03}, Complex{0.05, 0.02}, Complex{0.0, 0.0}), ab),
                               2.0, 2.0)};
        n.shunts = {{"cap", "t", diagonal({0.0, 0.03})}};
        out.push_back({"three_bus_unbalanced_source", std::move(n)});
    }
    {
        Network n;
        n.root = "0";
        n.buses = {slack_bus("0"), plain_bus("1"), plain_bus("2", ab), plain_bus("3", c_only)};
        n.lines = {make_line("e01", "0", "1", abc, coupled_z(2.0)),
                   make_line("e12", "1", "2", ab, restrict(coupled_z(1.0), ab)),
                   make_line("e31", "3", "1", c_only, restrict(coupled_z(0.7), c_only))};
        n.lines[0].ysh_from = line_charging(1e-3, abc);
        n.lines[0].ysh_to = line_charging(1e-3, abc);
        n.lines[1].ysh_to = line_charging(5e-4, ab);
        n.loads = {exponential(delta_load("Dab", "2", Vec3c(Complex{0.07, 0.03}, 0.0, 0.0), PhaseSet{Phase::a}), 1.0,
                               1.0),
                   wye_load("Yb", "2", Vec3c(0.0, Complex{0.03, 0.01}, 0.0), PhaseSet{Phase::b}),
                   exponential(wye_load("Yc", "3", Vec3c(0.0, 0.0, Complex{0.04, 0.02}), c_only), 0.5, 2.5),
                   exponential(delta_load("D1", "1", Vec3c(Complex{0.05, 0.02}, Complex{0.04, 0.02}, Complex{0.06, 0.01})),
                               1.5, 3.0),
                   wye_load("Y0", "0", Vec3c::Constant(Complex{0.01, 0.005}))};
        n.shunts = {{"cap1", "1", diagonal({0.0, 0.02})}, {"cap3", "3", diagonal({0.0, 0.01}, c_only)}};
        out.push_back({"four_bus_laterals", std::move(n)});
    }
    {
        Network n = star_four();
        n.lines[0].z_series = coupled_z(1.0);
        n.buses[2].phases = bc;
        n.lines[1].phases = bc;
        n.lines[1].z_series = restrict(coupled_z(1.2), bc);
        n.loads = {exponential(delta_load("D", "1", Vec3c(Complex{0.09, 0.04}, Complex{0.02, 0.0}, Complex{0.05, 0.03})),
                               2.0, 0.0),
                   exponential(delta_load("Dbc", "2", Vec3c(0.0, Complex{0.05, 0.02}, 0.0), PhaseSet{Phase::b}), 0.7,
                               0.7),
                   exponential(wye_load("Y", "3", Vec3c(Complex{0.04, 0.0}, Complex{0.03, 0.02}, Complex{0.05, 0.01})), 2.0,
                               2.0)};
        n.shunts = {{"y3", "3", line_charging(0.015, abc)}};
        out.push_back({"four_bus_star", std::move(n)});
    }
    return out;
}

} // namespace mdopf::testing
