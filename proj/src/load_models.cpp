#include "mdopf/load_models.hpp"

#include <cmath>
#include <numbers>

#include "mdopf/errors.hpp"

namespace mdopf::loads {

LoadCoefficients coefficients(const LoadSpec& load) {
    LoadCoefficients c;
    for (int p = 0; p < 3; ++p) {
        if (!load.phases.contains(p)) continue;
        c.a(p) = load.s0(p).real() / std::pow(load.v0mag(p), load.alpha(p));
        c.b(p) = load.s0(p).imag() / std::pow(load.v0mag(p), load.beta(p));
    }
    return c;
}

Vec3c exact_power(const LoadSpec& load, const Vec3& vmag2) {
    if (load.model == LoadModel::constant_power) return load.s0;
    const auto c = coefficients(load);
    Vec3c s = Vec3c::Zero();
    for (int p = 0; p < 3; ++p) {
        if (!load.phases.contains(p)) continue;
        if (vmag2(p) < 0.0) throw NegativeSquaredVoltage("load '" + load.id + "': negative squared voltage");
        const double pd = c.a(p) == 0.0 ? 0.0 : c.a(p) * std::pow(vmag2(p), load.alpha(p) / 2.0);
        const double qd = c.b(p) == 0.0 ? 0.0 : c.b(p) * std::pow(vmag2(p), load.beta(p) / 2.0);
        s(p) = Complex{pd, qd};
    }
    return s;
}

std::array<TangentRow, 3> tangent(const LoadSpec& load, const Vec3& point) {
    std::array<TangentRow, 3> rows{};
    if (load.model == LoadModel::constant_power) {
        for (int p = 0; p < 3; ++p) {
            rows[p].p_offset = load.s0(p).real();
            rows[p].q_offset = load.s0(p).imag();
        }
        return rows;
    }
    const auto c = coefficients(load);
    for (int p = 0; p < 3; ++p) {
        if (!load.phases.contains(p)) continue;
        const double v0 = point(p);
        // f(v) ~ f(v0) + f'(v0) (v - v0), f = k v^(e/2)
        auto expand = [v0](double k, double e, double& slope, double& offset) {
            if (k == 0.0) return;
            const double f = k * std::pow(v0, e / 2.0);
            slope = e == 0.0 ? 0.0 : k * (e / 2.0) * std::pow(v0, e / 2.0 - 1.0);
            offset = f - slope * v0;
        };
        expand(c.a(p), load.alpha(p), rows[p].p_slope, rows[p].p_offset);
        expand(c.b(p), load.beta(p), rows[p].q_slope, rows[p].q_offset);
    }
    return rows;
}

Vec3c linearized_power(const LoadSpec& load, const Vec3& vmag2, const Vec3& point) {
    const auto rows = tangent(load, point);
    Vec3c s = Vec3c::Zero();
    for (int p = 0; p < 3; ++p) {
        if (!load.phases.contains(p)) continue;
        s(p) = Complex{rows[p].p_slope * vmag2(p) + rows[p].p_offset, rows[p].q_slope * vmag2(p) + rows[p].q_offset};
    }
    return s;
}

Vec3 applied_vmag2(const LoadSpec& load, const Mat3c& w, VoltageMode mode) {
    Vec3 v = Vec3::Zero();
    for (int p = 0; p < 3; ++p) {
        if (!load.phases.contains(p)) continue;
        const double wpp = w(p, p).real();
        if (load.configuration == Configuration::wye) {
            v(p) = wpp;
        } else if (mode == VoltageMode::linearized) {
            v(p) = 3.0 * wpp;
        } else {
            const int q = index(successor(phase_at(p)));
            v(p) = wpp + w(q, q).real() - 2.0 * w(p, q).real();
        }
    }
    return v;
}

Vec3 applied_vmag2(const LoadSpec& load, const Vec3c& v, VoltageMode mode) {
    const Mat3c w = v * v.adjoint();
    return applied_vmag2(load, w, mode);
}

LoadSpec as_wye(const LoadSpec& load) {
    LoadSpec out = load;
    if (load.configuration == Configuration::delta) {
        out.configuration = Configuration::wye;
        out.v0mag /= std::numbers::sqrt3;
    }
    return out;
}

Vec3 expansion_point(const LoadSpec& load, double bus_point) {
    const double scale = load.configuration == Configuration::delta ? 3.0 : 1.0;
    return Vec3::Constant(scale * bus_point);
}

} // namespace mdopf::loads
