#pragma once

#include <Eigen/Dense>

#include "mdopf/types.hpp"

namespace mdopf::delta {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Circulant [1, g^2, g; g, 1, g^2; g^2, g, 1] with g = exp(-i 2 pi / 3).
const Mat3c& gamma_matrix();

/// Phase-to-phase difference operator: (Lambda V)_phi = V_phi - V_phi+.
const Eigen::Matrix3d& lambda_matrix();

/// Linear relation A * x_bus = B * x_delta between the bus withdrawal and the
/// branch consumption of a delta-connected device, with both sides stacked as
/// (p_a, p_b, p_c, q_a, q_b, q_c). Exact when bus voltages are balanced.
struct DeltaMapMatrix {
    Mat6 a;
    Mat6 b;
    Mat6 a_inv;
    Mat6 to_bus;    // A^-1 B
    Mat6 to_delta;  // Moore-Penrose pseudo-inverse of to_bus
};

/// Built once; the inverse is checked against ||A^-1 A - I||_inf <= 1e-12.
const DeltaMapMatrix& delta_map();

Vec6 stack(const Vec3c& s);
Vec3c unstack(const Vec6& x);

/// Bus withdrawal S^b implied by branch consumption S^d under balanced voltages.
Vec3c delta_to_bus(const Vec3c& sd);

/// Minimum-norm branch consumption reproducing `sb`. delta_to_bus is singular:
/// S^d proportional to (1, gamma, gamma^2) is a circulating pattern that draws
/// nothing from the bus, so only the component orthogonal to it is recovered.
Vec3c bus_to_delta(const Vec3c& sb);

/// Exact phasor relation: I^d = conj(S^d / (Lambda V)), I^b = Lambda^T I^d,
/// S^b = V .* conj(I^b). Branches with zero S^d carry no current.
/// Throws SingularBranchVoltage if a powered branch has zero voltage.
Vec3c exact_delta_bus_power(const Vec3c& v, const Vec3c& sd);

/// Bus-side currents drawn by the delta branches (Lambda^T I^d).
Vec3c delta_bus_current(const Vec3c& v, const Vec3c& sd);

} // namespace mdopf::delta
