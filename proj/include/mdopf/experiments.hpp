#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mdopf/ac_oracle.hpp"
#include "mdopf/lp_solver.hpp"
#include "mdopf/network.hpp"

namespace mdopf::exp {

/// Mean relative difference in percent, 100 * mean(|test - ref| / |ref|),
/// skipping components with |ref| < 1e-9.
struct DeltaMetric {
    double value = 0.0;
    std::size_t included = 0;
    std::size_t excluded = 0;
};

inline constexpr double kExcludeBelow = 1e-9;

/// Throws std::invalid_argument on length mismatch and EmptyAfterExclusion
/// when nothing is left to average.
DeltaMetric delta_metric(std::span<const double> test, std::span<const double> ref);

/// Voltage unbalance factor |V_n| / |V_p| in percent. Throws ZeroPositiveSequence.
double vuf(const Vec3c& v);

/// Rotates the b and c phasors of a balanced reference so that its VUF equals
/// `target_vuf`. The c angle is drawn uniformly from the part of [-0.35, 0.35] rad
/// where the target is reachable and the b angle is found by bisection within
/// [-0.6, 0.6] rad. Magnitudes are kept.
/// Throws NoFeasibleAngle after 50 unsuccessful draws.
Vec3c perturb_vref_to_vuf(const Vec3c& vref, double target_vuf, std::mt19937_64& rng);
Vec3c perturb_vref_to_vuf(const Vec3c& vref, double target_vuf, std::uint64_t seed);

enum class Model { lp_d_e, lp_d, ac_d_e, ac_d, ac_w_e };

std::string model_name(Model m);
std::optional<Model> parse_model(const std::string& name);
bool is_linear(Model m);
/// The AC model a model is measured against: lp-d -> ac-d, everything else -> ac-d-e.
Model reference_model(Model m);

lp::ModelConfig lp_config(Model m);
ac::SweepConfig ac_config(Model m);

/// Quantities compared between models, flattened in network order.
struct Observables {
    std::vector<double> w;   // squared magnitude per bus and present phase
    std::vector<double> pb;  // bus withdrawal per load and touched phase
    std::vector<double> qb;
    double objective = 0.0;
};

Observables observe(const lp::LinearSolution& sol, const Network& net);
Observables observe(const ac::PhasorState& state, const Network& net);

struct ModelResult {
    Model model = Model::lp_d_e;
    bool ok = false;         // solved (and, for AC, converged)
    std::string status;      // "ok" or the error category
    std::string message;
    Observables obs;
    int iterations = 0;
    double ms = 0.0;
    bool within_limits = false;
    double ac_losses = 0.0;  // AC models only
};

ModelResult run_model(const Network& net, Model m);

struct Comparison {
    DeltaMetric dw;
    DeltaMetric dpb;
    DeltaMetric dqb;
    double dobj = 0.0;
};

/// Metrics of `test` against `ref`. A metric whose reference vector is empty
/// after exclusion is left at zero with its has_* flag cleared.
struct ComparisonResult {
    Comparison metrics;
    bool has_dw = false;
    bool has_dpb = false;
    bool has_dqb = false;
};
ComparisonResult compare(const Observables& test, const Observables& ref);

// ---- studies ----

struct NominalRecord {
    std::string feeder;
    ModelResult result;
    std::optional<ComparisonResult> metrics;
};

std::vector<NominalRecord> run_nominal_comparison(const Network& net, const std::string& feeder,
                                                  std::span<const Model> models);
/// `feeder,model,objective,dw_pct,dpb_pct,dqb_pct,iters,ms,status`; ms is left
/// empty unless `timing` is set so that repeated runs are byte-identical.
void write_nominal_csv(const std::vector<NominalRecord>& records, const std::string& path, bool timing = false);

/// Same network with every load exponential and alpha = beta = exponent.
Network with_uniform_exponent(const Network& net, double exponent);
/// Same network with the slack reference replaced.
Network with_vref(const Network& net, const Vec3c& vref);

struct ExponentRecord {
    double alpha = 0.0;
    std::optional<double> obj_lp;
    std::optional<double> obj_ac;
    double ac_losses = 0.0;
    bool ac_converged = false;
};

std::vector<ExponentRecord> run_exponent_sweep(const Network& net, std::span<const double> alphas);
void write_exponent_csv(const std::vector<ExponentRecord>& records, const std::string& path);

struct VufSample {
    double target = 0.0;
    int sample = 0;
    std::optional<double> dw;
    bool converged = false;
};

struct VufSummary {
    double target = 0.0;
    std::size_t n_ok = 0;
    std::size_t n_failed = 0;
    double min = 0.0, p10 = 0.0, median = 0.0, p90 = 0.0, max = 0.0;
};

struct VufSweep {
    std::vector<VufSample> samples;
    std::vector<VufSummary> summary;
};

/// Each sample draws from its own stream seeded by (seed, target index, sample index),
/// so the result does not depend on the thread count.
VufSweep run_vuf_sweep(const Network& net, std::span<const double> targets, int samples, std::uint64_t seed,
                       unsigned threads = 0);
/// `target_vuf,sample,dw_pct,converged` rows, then a summary block with
/// `target_vuf,n_ok,n_failed,min,p10,median,p90,max`.
void write_vuf_csv(const VufSweep& sweep, const std::string& path);

struct VrefRecord {
    double m = 1.0;
    std::optional<double> dw;
    bool converged_lp = false;  // solved and within voltage bounds
    bool converged_ac = false;  // converged and within voltage bounds
};

std::vector<VrefRecord> run_vref_sweep(const Network& net, std::span<const double> factors);
void write_vref_csv(const std::vector<VrefRecord>& records, const std::string& path);

/// Evenly spaced values from `from` towards `to` (inclusive) in steps of |step|.
std::vector<double> grid(double from, double to, double step);

/// Linear-interpolation percentile of an unsorted sample, q in [0, 1].
double percentile(std::vector<double> values, double q);

/// MDOPF_THREADS, 0 or unset meaning hardware concurrency.
unsigned thread_count_from_env();

} // namespace mdopf::exp
