#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "mdopf/network.hpp"
#include "mdopf/types.hpp"

namespace mdopf::lp {

enum class LoadMode {
    constant,                // every load draws s0 (LP-D)
    linearized_exponential,  // tangent load model (LP-D-E)
};

struct ModelConfig {
    LoadMode load_mode = LoadMode::linearized_exponential;
    bool delta_as_wye = false;
    /// Bus-level squared voltage at which load powers are expanded.
    double linearization_point = 1.0;
};

/// Offsets of each block of real unknowns in the assembled system.
///
/// Per bus (9): W_aa, W_bb, W_cc, Re/Im W_ab, Re/Im W_bc, Re/Im W_ac.
/// Per line (6): P_a, P_b, P_c, Q_a, Q_b, Q_c of the flow leaving the parent end.
/// Per load (15): sd (6, same p/q stacking), sb (6), v (3).
/// Slack (6): injected P_a..c, Q_a..c.
struct SystemLayout {
    std::vector<std::size_t> w_offset;     // by bus index
    std::vector<std::size_t> line_offset;  // by line index
    std::vector<std::size_t> load_offset;  // by load index
    std::size_t slack_offset = 0;
    std::size_t size = 0;

    static constexpr std::size_t kSdOffset = 0;
    static constexpr std::size_t kSbOffset = 6;
    static constexpr std::size_t kVOffset = 12;
};

struct SparseLinearSystem {
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
    SystemLayout layout;
};

struct LinearSolution {
    std::vector<Mat3c> w;        // by bus index
    std::vector<Vec3c> s_flow;   // by line index, leaving the parent-side bus
    std::vector<Vec3c> sd;       // by load index
    std::vector<Vec3c> sb;
    std::vector<Vec3> v_load;
    Vec3c s_slack = Vec3c::Zero();
    double objective = 0.0;      // total real slack injection
    double residual = 0.0;       // ||M x - r||_inf
};

/// Builds the square real system of the linear branch-flow model.
/// Throws NonSquareSystem if the network has dispatchable generators and
/// ValidationError if the network is invalid.
SparseLinearSystem assemble(const Network& network, const ModelConfig& config);

/// Direct sparse LU solve and unpacking. Throws StructurallySingular or
/// NumericallySingular.
LinearSolution solve(const SparseLinearSystem& system);

LinearSolution solve(const Network& network, const ModelConfig& config);

/// Reassembles the Hermitian W stored at `offset` in x.
Mat3c unpack_w(const Eigen::VectorXd& x, std::size_t offset);

struct LimitViolation {
    std::string bus;
    Phase phase;
    double w = 0.0;          // squared magnitude
    double bound = 0.0;      // squared bound that was crossed
    double violation = 0.0;  // distance beyond the bound, squared units
    bool below = false;
};

struct LimitReport {
    std::vector<LimitViolation> violations;
    bool ok() const { return violations.empty(); }
};

LimitReport check_operational_limits(const LinearSolution& solution, const Network& network);

} // namespace mdopf::lp
