#pragma once

#include <vector>

#include "mdopf/network.hpp"
#include "mdopf/types.hpp"

namespace mdopf::ac {

enum class LoadMode {
    constant,     // s0 regardless of voltage (AC-D)
    exponential,  // exact exponential model (AC-D-E)
};

struct SweepConfig {
    double tol = 1e-10;  // infinity norm of the voltage update
    int max_iter = 200;
    LoadMode load_mode = LoadMode::exponential;
    bool delta_as_wye = false;
};

struct PhasorState {
    std::vector<Vec3c> v;       // by bus index
    std::vector<Vec3c> i_line;  // by line index, series current leaving the parent end
    std::vector<Vec3c> sd;      // by load index
    std::vector<Vec3c> sb;
    Vec3c s_slack = Vec3c::Zero();
    int iterations = 0;
    bool converged = false;
    double max_mismatch = 0.0;
    SweepConfig config;
};

/// Radial backward/forward sweep with loads re-evaluated every iteration.
/// Returns the last iterate with converged = false when max_iter is reached or
/// the iteration diverges. Throws ZeroVoltagePhase, NonSquareSystem, ValidationError.
PhasorState sweep_solve(const Network& network, const SweepConfig& config = {});

/// Infinity norm over buses and phases of the complex power balance residual,
/// with line currents recomputed from the voltages by Ohm's law.
double power_mismatch(const PhasorState& state, const Network& network);

/// Sum of series-impedance real losses, sum_e Re((V_i - V_j)^T conj(I_e)).
double total_line_losses(const PhasorState& state, const Network& network);

/// Real power drawn by line-end and device shunts.
double total_shunt_draw(const PhasorState& state, const Network& network);

/// Throws NotConverged unless state.converged.
void require_converged(const PhasorState& state);

} // namespace mdopf::ac
