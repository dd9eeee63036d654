#include "mdopf/delta_wye.hpp"

#include <cmath>
#include <numbers>

#include "mdopf/errors.hpp"

namespace mdopf::delta {

namespace {

constexpr double kS3 = std::numbers::sqrt3;

DeltaMapMatrix build() {
    DeltaMapMatrix m;
    // columns: pb1 pb2 pb3 qb1 qb2 qb3
    // clang-format off
    m.a << 1.0,  1.0,       1.0,       0.0, 0.0,       0.0,
           0.0,  0.0,       0.0,       1.0, 1.0,       1.0,
           0.0,  1.5,       0.0,       0.0, -kS3 / 2,  0.0,
           0.0,  kS3 / 2,   0.0,       0.0, 1.5,       0.0,
           0.0,  0.0,       1.5,       0.0, kS3,       -kS3 / 2,
           0.0,  -kS3,      kS3 / 2,   0.0, 0.0,       1.5;
    // columns: pd1 pd2 pd3 qd1 qd2 qd3
    m.b << 1.0,       1.0, 1.0, 0.0,       0.0, 0.0,
           0.0,       0.0, 0.0, 1.0,       1.0, 1.0,
           0.5,       1.0, 0.0, -kS3 / 2,  0.0, 0.0,
           kS3 / 2,   0.0, 0.0, 0.5,       1.0, 0.0,
           0.5,       0.0, 1.0, kS3 / 2,   0.0, 0.0,
           -kS3 / 2,  0.0, 0.0, 0.5,       0.0, 1.0;
    // clang-format on
    m.a_inv = m.a.fullPivLu().inverse();
    const double err = (m.a_inv * m.a - Mat6::Identity()).cwiseAbs().rowwise().sum().maxCoeff();
    if (!(err <= 1e-12)) throw NumericallySingular("delta map inverse self-check failed");
    m.to_bus = m.a_inv * m.b;
    m.to_delta = m.to_bus.completeOrthogonalDecomposition().pseudoInverse();
    return m;
}

} // namespace

const Mat3c& gamma_matrix() {
    static const Mat3c g = [] {
        const Complex g1 = kGamma;
        const Complex g2 = kGamma * kGamma;
        Mat3c m;
        m << 1.0, g2, g1, g1, 1.0, g2, g2, g1, 1.0;
        return m;
    }();
    return g;
}

const Eigen::Matrix3d& lambda_matrix() {
    static const Eigen::Matrix3d l = [] {
        Eigen::Matrix3d m;
        m << 1, -1, 0, 0, 1, -1, -1, 0, 1;
        return m;
    }();
    return l;
}

const DeltaMapMatrix& delta_map() {
    static const DeltaMapMatrix m = build();
    return m;
}

Vec6 stack(const Vec3c& s) {
    Vec6 x;
    x << s.real(), s.imag();
    return x;
}

Vec3c unstack(const Vec6& x) {
    Vec3c s;
    for (int p = 0; p < 3; ++p) s(p) = Complex{x(p), x(p + 3)};
    return s;
}

Vec3c delta_to_bus(const Vec3c& sd) { return unstack(delta_map().to_bus * stack(sd)); }

Vec3c bus_to_delta(const Vec3c& sb) { return unstack(delta_map().to_delta * stack(sb)); }

Vec3c delta_bus_current(const Vec3c& v, const Vec3c& sd) {
    const Vec3c vl = lambda_matrix().cast<Complex>() * v;
    Vec3c id = Vec3c::Zero();
    for (int p = 0; p < 3; ++p) {
        if (sd(p) == Complex{}) continue;
        if (std::abs(vl(p)) == 0.0)
            throw SingularBranchVoltage(std::string("zero voltage across delta branch ") + phase_name(phase_at(p)));
        id(p) = std::conj(sd(p) / vl(p));
    }
    return lambda_matrix().transpose().cast<Complex>() * id;
}

Vec3c exact_delta_bus_power(const Vec3c& v, const Vec3c& sd) {
    const Vec3c ib = delta_bus_current(v, sd);
    return v.cwiseProduct(ib.conjugate());
}

} // namespace mdopf::delta
