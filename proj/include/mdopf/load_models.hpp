#pragma once

#include "mdopf/network.hpp"
#include "mdopf/types.hpp"

namespace mdopf::loads {

/// a = p0 / |V0|^alpha, b = q0 / |V0|^beta per phase; zero on absent phases.
struct LoadCoefficients {
    Vec3 a = Vec3::Zero();
    Vec3 b = Vec3::Zero();
};

LoadCoefficients coefficients(const LoadSpec& load);

/// p = a * v^(alpha/2), q = b * v^(beta/2) with v the squared applied voltage
/// magnitude. Constant-power loads return s0.
Vec3c exact_power(const LoadSpec& load, const Vec3& vmag2);

/// p = slope * v + offset, the tangent of exact_power at v = point.
struct TangentRow {
    double p_slope = 0.0;
    double p_offset = 0.0;
    double q_slope = 0.0;
    double q_offset = 0.0;
};

/// Tangent coefficients per phase; a constant-power load has zero slopes.
std::array<TangentRow, 3> tangent(const LoadSpec& load, const Vec3& point);

/// Tangent-line evaluation of exact_power around v = point (default 1).
Vec3c linearized_power(const LoadSpec& load, const Vec3& vmag2, const Vec3& point = Vec3::Ones());

enum class VoltageMode { exact, linearized };

/// Squared applied voltage per phase (branch, for delta).
/// exact: wye diag(W), delta diag(Lambda W Lambda^T).
/// linearized: wye diag(W), delta 3 * diag(W).
Vec3 applied_vmag2(const LoadSpec& load, const Mat3c& w, VoltageMode mode);
Vec3 applied_vmag2(const LoadSpec& load, const Vec3c& v, VoltageMode mode);

/// The same load reconnected in wye: branch phi is placed on phase phi and the
/// reference magnitude is moved from line-to-line to phase-to-neutral so that
/// the device keeps its rating at nominal voltage. Wye loads are returned as is.
LoadSpec as_wye(const LoadSpec& load);

/// Squared voltage at which the linear model expands a load's power. For delta
/// loads the bus-level point is scaled by |1 - gamma|^2 = 3 since the model
/// carries 3 W_phiphi as the applied value.
Vec3 expansion_point(const LoadSpec& load, double bus_point);

} // namespace mdopf::loads
