#include <gtest/gtest.h>

#include <mdopf/ac_oracle.hpp>
#include <mdopf/delta_wye.hpp>
#include <mdopf/errors.hpp>
#include <mdopf/feeder_io.hpp>

#include "support/nodal_oracle.hpp"
#include "support/paths.hpp"
#include "support/synthetic.hpp"

using namespace mdopf;
using namespace mdopf::testing;

namespace {

Network all_impedance(Network n) {
    for (auto& l : n.loads) l = exponential(l, 2.0, 2.0);
    return n;
}

Network scaled_loads(Network n, double k) {
    for (auto& l : n.loads) l.s0 *= k;
    return n;
}

double total_load(const ac::PhasorState& s) {
    double p = 0.0;
    for (const auto& sb : s.sb) p += sb.real().sum();
    return p;
}

} // namespace

TEST(Sweep, NoLoadConvergesImmediately) {
    const Network n = two_bus_empty();
    const auto s = ac::sweep_solve(n);
    EXPECT_TRUE(s.converged);
    EXPECT_EQ(s.iterations, 1);
    EXPECT_EQ(s.v[1], *n.buses[0].vref);
    EXPECT_EQ(s.s_slack.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LE(ac::power_mismatch(s, n), 1e-14);
}

TEST(Sweep, TwoBusAgainstScalarFixedPoint) {
    const Network n = two_bus_wye();
    const auto s = ac::sweep_solve(n);
    ASSERT_TRUE(s.converged);
    EXPECT_LE(s.iterations, 15);
    EXPECT_LE(ac::power_mismatch(s, n), 1e-8);
    const Complex z{0.01, 0.02}, load{0.1, 0.05};
    for (int p = 0; p < 3; ++p) {
        const Complex v0 = (*n.buses[0].vref)(p);
        Complex v = v0;
        for (int it = 0; it < 200; ++it) v = v0 - z * std::conj(load / v);
        EXPECT_NEAR(std::abs(s.v[1](p) - v), 0.0, 1e-10);
        EXPECT_NEAR(std::norm(s.v[1](p)), 0.99601, 5e-4);
    }
    const double losses = ac::total_line_losses(s, n);
    EXPECT_GT(losses, 0.0);
    EXPECT_NEAR(s.s_slack.real().sum(), 0.3 + losses, 1e-9);
}

TEST(Sweep, SlackAndAbsentPhases) {
    for (const auto& [name, net] : small_feeders()) {
        const auto s = ac::sweep_solve(net);
        ASSERT_TRUE(s.converged) << name;
        const auto root = *net.bus_index(net.root);
        EXPECT_EQ(s.v[root], *net.buses[root].vref) << name;
        for (std::size_t b = 0; b < net.buses.size(); ++b)
            for (int p = 0; p < 3; ++p)
                if (!net.buses[b].phases.contains(p)) EXPECT_EQ(s.v[b](p), Complex{}) << name;
        EXPECT_LE(ac::power_mismatch(s, net), 1e-8) << name;
    }
}

TEST(Sweep, ImpedanceLoadsMatchNodalSolve) {
    std::vector<NamedNetwork> cases = small_feeders();
    cases.push_back({"eight_bus", io::parse_feeder(data_file("eight_bus_mixed.json"))});
    for (const auto& [name, raw] : cases)
        for (bool as_wye : {false, true}) {
            const Network net = all_impedance(raw);
            ac::SweepConfig cfg;
            cfg.delta_as_wye = as_wye;
            const auto s = ac::sweep_solve(net, cfg);
            ASSERT_TRUE(s.converged) << name;
            const auto ref = nodal_impedance_solve(net, as_wye);
            for (std::size_t b = 0; b < net.buses.size(); ++b)
                EXPECT_LE((s.v[b] - ref.v[b]).cwiseAbs().maxCoeff(), 1e-9) << name << " bus " << b;
            EXPECT_LE((s.s_slack - ref.s_slack).cwiseAbs().maxCoeff(), 1e-9) << name;
        }
}

TEST(Sweep, ConstantModeIgnoresExponents) {
    const Network net = io::parse_feeder(data_file("eight_bus_mixed.json"));
    ac::SweepConfig cfg;
    cfg.load_mode = ac::LoadMode::constant;
    const auto s = ac::sweep_solve(net, cfg);
    ASSERT_TRUE(s.converged);
    for (std::size_t l = 0; l < net.loads.size(); ++l)
        EXPECT_LE((s.sd[l] - net.loads[l].s0).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Sweep, EnergyConservation) {
    const Network net = io::parse_feeder(data_file("eight_bus_mixed.json"));
    const auto s = ac::sweep_solve(net);
    ASSERT_TRUE(s.converged);
    const double load = total_load(s), shunt = ac::total_shunt_draw(s, net), losses = ac::total_line_losses(s, net);
    EXPECT_GE(load, 0.0);
    EXPECT_GE(shunt, -1e-12);
    EXPECT_GT(losses, 0.0);
    EXPECT_NEAR(s.s_slack.real().sum(), load + shunt + losses, 1e-8);
    for (std::size_t l = 0; l < net.loads.size(); ++l)
        EXPECT_NEAR(std::abs(s.sb[l].sum() - s.sd[l].sum()), 0.0, 1e-12) << net.loads[l].id;
}

TEST(Sweep, DeltaLoadAtBalancedSlackMatchesLinearMap) {
    Network n = two_bus_empty();
    n.loads = {delta_load("D", "0", Vec3c(Complex(0.2, 0.1), Complex(0.05, -0.02), Complex(0.11, 0.04)))};
    const auto s = ac::sweep_solve(n);
    ASSERT_TRUE(s.converged);
    EXPECT_LE((s.sb[0] - delta::delta_to_bus(s.sd[0])).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Mismatch, DetectsPerturbedVoltage) {
    const Network n = two_bus_wye();
    auto s = ac::sweep_solve(n);
    ASSERT_TRUE(s.converged);
    s.v[1](1) += 1e-3;
    EXPECT_GT(ac::power_mismatch(s, n), 1e-6);
}

TEST(Sweep, HeavyLoadingReportsNonConvergence) {
    const Network net = scaled_loads(io::parse_feeder(data_file("eight_bus_mixed.json")), 60.0);
    ac::PhasorState s;
    ASSERT_NO_THROW(s = ac::sweep_solve(net));
    EXPECT_FALSE(s.converged);
    EXPECT_THROW(ac::require_converged(s), NotConverged);
}

TEST(Sweep, ZeroVoltageAtPoweredLoad) {
    Network n = two_bus_wye();
    n.buses[0].vref = Vec3c(0.0, kGamma, kGamma * kGamma);
    EXPECT_THROW(ac::sweep_solve(n), ZeroVoltagePhase);
}

TEST(Sweep, RefusesGenerators) {
    Network n = two_bus_wye();
    n.generators = {{"G", "1", PhaseSet::all()}};
    EXPECT_THROW(ac::sweep_solve(n), NonSquareSystem);
}
