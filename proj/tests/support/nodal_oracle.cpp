#include "nodal_oracle.hpp"

#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace mdopf::testing {

namespace {

Mat3c restricted_inverse(const Mat3c& z, PhaseSet phases) {
    std::vector<int> idx;
    for (int p = 0; p < 3; ++p)
        if (phases.contains(p)) idx.push_back(p);
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXcd sub(k, k);
    for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < k; ++c) sub(r, c) = z(idx[r], idx[c]);
    const Eigen::MatrixXcd inv = sub.inverse();
    Mat3c out = Mat3c::Zero();
    for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < k; ++c) out(idx[r], idx[c]) = inv(r, c);
    return out;
}

Mat3c load_admittance(const LoadSpec& load, bool delta_as_wye) {
    for (int p = 0; p < 3; ++p)
        if (load.phases.contains(p) && load.s0(p) != Complex{} &&
            (load.model != LoadModel::exponential || load.alpha(p) != 2.0 || load.beta(p) != 2.0))
            throw std::invalid_argument("nodal oracle needs constant-impedance loads");
    const bool delta = load.configuration == Configuration::delta && !delta_as_wye;
    Vec3c y = Vec3c::Zero();
    for (int p = 0; p < 3; ++p) {
        double v0 = load.v0mag(p);
        if (load.configuration == Configuration::delta && delta_as_wye) v0 /= std::numbers::sqrt3;
        if (load.phases.contains(p)) y(p) = std::conj(load.s0(p)) / (v0 * v0);
    }
    if (!delta) return y.asDiagonal();
    Eigen::Matrix3cd lambda;
    lambda << 1.0, -1.0, 0.0, 0.0, 1.0, -1.0, -1.0, 0.0, 1.0;
    return lambda.transpose() * y.asDiagonal() * lambda;
}

} // namespace

NodalSolution nodal_impedance_solve(const Network& net, bool delta_as_wye) {
    const auto n = static_cast<Eigen::Index>(net.buses.size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(3 * n, 3 * n);
    auto add = [&](std::size_t r, std::size_t c, const Mat3c& block) {
        y.block<3, 3>(3 * static_cast<Eigen::Index>(r), 3 * static_cast<Eigen::Index>(c)) += block;
    };
    for (const auto& l : net.lines) {
        const auto f = *net.bus_index(l.from_bus), t = *net.bus_index(l.to_bus);
        const Mat3c ys = restricted_inverse(l.z_series, l.phases);
        add(f, f, ys + l.ysh_from);
        add(t, t, ys + l.ysh_to);
        add(f, t, -ys);
        add(t, f, -ys);
    }
    for (const auto& s : net.shunts) {
        const auto b = *net.bus_index(s.bus);
        add(b, b, s.y);
    }
    for (const auto& l : net.loads) {
        const auto b = *net.bus_index(l.bus);
        add(b, b, load_admittance(l, delta_as_wye));
    }

    const auto root = *net.bus_index(net.root);
    std::vector<Eigen::Index> free, fixed;
    for (Eigen::Index b = 0; b < n; ++b)
        for (int p = 0; p < 3; ++p) {
            if (!net.buses[b].phases.contains(p)) continue;
            (static_cast<std::size_t>(b) == root ? fixed : free).push_back(3 * b + p);
        }
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(3 * n);
    for (Eigen::Index k : fixed) v(k) = (*net.buses[root].vref)(k % 3);

    const auto nf = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXcd yff(nf, nf);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(nf);
    for (Eigen::Index r = 0; r < nf; ++r) {
        for (Eigen::Index c = 0; c < nf; ++c) yff(r, c) = y(free[r], free[c]);
        for (Eigen::Index k : fixed) rhs(r) -= y(free[r], k) * v(k);
    }
    const Eigen::VectorXcd vf = yff.fullPivLu().solve(rhs);
    for (Eigen::Index r = 0; r < nf; ++r) v(free[r]) = vf(r);

    NodalSolution out;
    for (Eigen::Index b = 0; b < n; ++b) out.v.push_back(v.segment<3>(3 * b));
    const Eigen::VectorXcd current = y * v;
    for (int p = 0; p < 3; ++p) {
        const Eigen::Index k = 3 * static_cast<Eigen::Index>(root) + p;
        out.s_slack(p) = v(k) * std::conj(current(k));
    }
    return out;
}

} // namespace mdopf::testing
