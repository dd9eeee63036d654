#include "mdopf/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "mdopf/csv.hpp"
#include "mdopf/errors.hpp"

namespace mdopf::exp {

DeltaMetric delta_metric(std::span<const double> test, std::span<const double> ref) {
    if (test.size() != ref.size())
        throw std::invalid_argument("delta_metric: length mismatch " + std::to_string(test.size()) + " vs " +
                                    std::to_string(ref.size()));
    DeltaMetric m;
    double sum = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        if (std::abs(ref[i]) < kExcludeBelow) {
            ++m.excluded;
            continue;
        }
        sum += std::abs(test[i] - ref[i]) / std::abs(ref[i]);
        ++m.included;
    }
    if (m.included == 0) throw EmptyAfterExclusion("delta_metric: no component with a nonzero reference");
    m.value = 100.0 * sum / static_cast<double>(m.included);
    return m;
}

double vuf(const Vec3c& v) {
    const Complex g = kGamma;
    const Complex g2 = g * g;
    const Complex vp = (v(0) + g2 * v(1) + g * v(2)) / 3.0;
    const Complex vn = (v(0) + g * v(1) + g2 * v(2)) / 3.0;
    if (std::abs(vp) <= 1e-12) throw ZeroPositiveSequence("positive-sequence component vanishes");
    return 100.0 * std::abs(vn) / std::abs(vp);
}

namespace {

constexpr double kThetaCMax = 0.35;
constexpr double kThetaBMax = 0.6;
constexpr int kMaxDraws = 50;

Vec3c rotated(const Vec3c& vref, double theta_b, double theta_c) {
    Vec3c v = vref;
    v(1) *= std::polar(1.0, theta_b);
    v(2) *= std::polar(1.0, theta_c);
    return v;
}

// Minimiser of a function that is unimodal on [lo, hi], coarse grid then golden section.
template <class F>
double argmin_on(F&& f, double lo, double hi) {
    constexpr int kGrid = 240;
    int best = 0;
    double best_val = f(lo);
    for (int k = 1; k <= kGrid; ++k) {
        const double val = f(lo + (hi - lo) * k / kGrid);
        if (val < best_val) {
            best_val = val;
            best = k;
        }
    }
    double a = lo + (hi - lo) * std::max(best - 1, 0) / kGrid;
    double b = lo + (hi - lo) * std::min(best + 1, kGrid) / kGrid;
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

double min_vuf_over_theta_b(const Vec3c& vref, double theta_c) {
    auto f = [&](double tb) { return vuf(rotated(vref, tb, theta_c)); };
    return f(argmin_on(f, -kThetaBMax, kThetaBMax));
}

// Largest |theta_c| toward `edge` for which some theta_b still reaches the target.
double feasible_theta_c_limit(const Vec3c& vref, double target, double edge) {
    if (min_vuf_over_theta_b(vref, edge) <= target) return edge;
    double ok = 0.0, bad = edge;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (ok + bad);
        (min_vuf_over_theta_b(vref, mid) <= target ? ok : bad) = mid;
    }
    return ok;
}

} // namespace

Vec3c perturb_vref_to_vuf(const Vec3c& vref, double target, std::mt19937_64& rng) {
    if (target == 0.0) return vref;
    if (!(target > 0.0 && target <= 15.0)) throw InputError("target VUF must lie in (0, 15]");

    std::uniform_real_distribution<double> theta_c_dist(feasible_theta_c_limit(vref, target, -kThetaCMax),
                                                        feasible_theta_c_limit(vref, target, kThetaCMax));
    std::bernoulli_distribution coin(0.5);
    for (int draw = 0; draw < kMaxDraws; ++draw) {
        const double theta_c = theta_c_dist(rng);
        const bool upper_first = coin(rng);
        auto f = [&](double tb) { return vuf(rotated(vref, tb, theta_c)); };

        const double tmin = argmin_on(f, -kThetaBMax, kThetaBMax);
        if (f(tmin) > target) continue;
        for (int side = 0; side < 2; ++side) {
            const bool upper = (side == 0) == upper_first;
            const double edge = upper ? kThetaBMax : -kThetaBMax;
            if (f(edge) < target) continue;
            double inside = tmin, outside = edge;
            double mid = inside;
            for (int it = 0; it < 200; ++it) {
                mid = 0.5 * (inside + outside);
                const double g = f(mid) - target;
                if (std::abs(g) <= 1e-10) break;
                (g < 0.0 ? inside : outside) = mid;
            }
            if (std::abs(f(mid) - target) <= 1e-6) return rotated(vref, mid, theta_c);
        }
    }
    throw NoFeasibleAngle(fmt::format("no angle perturbation reaches VUF {}% after {} draws", target, kMaxDraws));
}

Vec3c perturb_vref_to_vuf(const Vec3c& vref, double target, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return perturb_vref_to_vuf(vref, target, rng);
}

std::string model_name(Model m) {
    switch (m) {
    case Model::lp_d_e: return "lp-d-e";
    case Model::lp_d: return "lp-d";
    case Model::ac_d_e: return "ac-d-e";
    case Model::ac_d: return "ac-d";
    case Model::ac_w_e: return "ac-w-e";
    }
    return "?";
}

std::optional<Model> parse_model(const std::string& name) {
    for (Model m : {Model::lp_d_e, Model::lp_d, Model::ac_d_e, Model::ac_d, Model::ac_w_e})
        if (model_name(m) == name) return m;
    return std::nullopt;
}

bool is_linear(Model m) { return m == Model::lp_d_e || m == Model::lp_d; }

Model reference_model(Model m) { return m == Model::lp_d ? Model::ac_d : Model::ac_d_e; }

lp::ModelConfig lp_config(Model m) {
    lp::ModelConfig c;
    c.load_mode = m == Model::lp_d ? lp::LoadMode::constant : lp::LoadMode::linearized_exponential;
    return c;
}

ac::SweepConfig ac_config(Model m) {
    ac::SweepConfig c;
    c.load_mode = m == Model::ac_d ? ac::LoadMode::constant : ac::LoadMode::exponential;
    c.delta_as_wye = m == Model::ac_w_e;
    return c;
}

namespace {

template <class SbAt>
void observe_loads(Observables& o, const Network& net, SbAt&& sb_at) {
    for (std::size_t l = 0; l < net.loads.size(); ++l) {
        const auto& load = net.loads[l];
        const PhaseSet shown = load.phases | load_footprint(load);
        for (int p = 0; p < 3; ++p) {
            if (!shown.contains(p)) continue;
            o.pb.push_back(sb_at(l, p).real());
            o.qb.push_back(sb_at(l, p).imag());
        }
    }
}

} // namespace

Observables observe(const lp::LinearSolution& sol, const Network& net) {
    Observables o;
    for (std::size_t b = 0; b < net.buses.size(); ++b)
        for (int p = 0; p < 3; ++p)
            if (net.buses[b].phases.contains(p)) o.w.push_back(sol.w[b](p, p).real());
    observe_loads(o, net, [&](std::size_t l, int p) { return sol.sb[l](p); });
    o.objective = sol.objective;
    return o;
}

Observables observe(const ac::PhasorState& state, const Network& net) {
    Observables o;
    for (std::size_t b = 0; b < net.buses.size(); ++b)
        for (int p = 0; p < 3; ++p)
            if (net.buses[b].phases.contains(p)) o.w.push_back(std::norm(state.v[b](p)));
    observe_loads(o, net, [&](std::size_t l, int p) { return state.sb[l](p); });
    o.objective = state.s_slack.real().sum();
    return o;
}

namespace {

bool within_limits(const std::vector<double>& w, const Network& net) {
    std::size_t k = 0;
    for (const auto& bus : net.buses)
        for (int p = 0; p < 3; ++p) {
            if (!bus.phases.contains(p)) continue;
            const double lo = bus.vmin(p) * bus.vmin(p);
            const double hi = bus.vmax(p) * bus.vmax(p);
            if (w[k] < lo || w[k] > hi) return false;
            ++k;
        }
    return true;
}

} // namespace

ModelResult run_model(const Network& net, Model m) {
    ModelResult r;
    r.model = m;
    const auto start = std::chrono::steady_clock::now();
    try {
        if (is_linear(m)) {
            const auto sol = lp::solve(net, lp_config(m));
            r.obs = observe(sol, net);
            r.iterations = 1;
            r.ok = true;
            r.status = "ok";
        } else {
            const auto state = ac::sweep_solve(net, ac_config(m));
            r.obs = observe(state, net);
            r.iterations = state.iterations;
            r.ac_losses = ac::total_line_losses(state, net);
            r.ok = state.converged;
            r.status = state.converged ? "ok" : "not_converged";
        }
        r.within_limits = r.ok && within_limits(r.obs.w, net);
    } catch (const ZeroVoltagePhase& e) {
        r.status = "zero_voltage";
        r.message = e.what();
    } catch (const SolverError& e) {
        r.status = "solver_error";
        r.message = e.what();
    } catch (const InputError& e) {
        r.status = "input_error";
        r.message = e.what();
    }
    r.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

ComparisonResult compare(const Observables& test, const Observables& ref) {
    ComparisonResult out;
    auto metric = [](const std::vector<double>& t, const std::vector<double>& r, DeltaMetric& dst, bool& has) {
        try {
            dst = delta_metric(t, r);
            has = true;
        } catch (const EmptyAfterExclusion&) {
            dst = DeltaMetric{0.0, 0, r.size()};
            has = false;
        }
    };
    metric(test.w, ref.w, out.metrics.dw, out.has_dw);
    metric(test.pb, ref.pb, out.metrics.dpb, out.has_dpb);
    metric(test.qb, ref.qb, out.metrics.dqb, out.has_dqb);
    out.metrics.dobj = std::abs(ref.objective) < kExcludeBelow
                           ? 0.0
                           : 100.0 * std::abs(test.objective - ref.objective) / std::abs(ref.objective);
    return out;
}

std::vector<NominalRecord> run_nominal_comparison(const Network& net, const std::string& feeder,
                                                  std::span<const Model> models) {
    std::vector<std::optional<ModelResult>> cache(5);
    auto result_for = [&](Model m) -> const ModelResult& {
        auto& slot = cache[static_cast<std::size_t>(m)];
        if (!slot) slot = run_model(net, m);
        return *slot;
    };

    std::vector<NominalRecord> records;
    for (Model m : models) {
        NominalRecord rec;
        rec.feeder = feeder;
        rec.result = result_for(m);
        const ModelResult& ref = result_for(reference_model(m));
        if (rec.result.ok && ref.ok) rec.metrics = compare(rec.result.obs, ref.obs);
        records.push_back(std::move(rec));
    }
    return records;
}

namespace {

std::string opt_fixed(const std::optional<double>& v) { return v ? csv::fixed(*v) : std::string{}; }

} // namespace

void write_nominal_csv(const std::vector<NominalRecord>& records, const std::string& path, bool timing) {
    csv::Writer out(path);
    out.row({"feeder", "model", "objective", "dw_pct", "dpb_pct", "dqb_pct", "iters", "ms", "status"});
    for (const auto& rec : records) {
        const auto& r = rec.result;
        auto metric = [&](bool has, const DeltaMetric& d) {
            return rec.metrics && has ? csv::fixed(d.value) : std::string{};
        };
        out.row({rec.feeder, model_name(r.model), r.ok ? csv::fixed(r.obs.objective) : std::string{},
                 rec.metrics ? metric(rec.metrics->has_dw, rec.metrics->metrics.dw) : std::string{},
                 rec.metrics ? metric(rec.metrics->has_dpb, rec.metrics->metrics.dpb) : std::string{},
                 rec.metrics ? metric(rec.metrics->has_dqb, rec.metrics->metrics.dqb) : std::string{},
                 std::to_string(r.iterations), timing ? csv::fixed(r.ms, 3) : std::string{}, r.status});
    }
    out.close();
}

Network with_uniform_exponent(const Network& net, double exponent) {
    Network out = net;
    for (auto& load : out.loads) {
        load.model = LoadModel::exponential;
        for (int p = 0; p < 3; ++p) {
            load.alpha(p) = load.phases.contains(p) ? exponent : 0.0;
            load.beta(p) = load.alpha(p);
        }
    }
    return out;
}

Network with_vref(const Network& net, const Vec3c& vref) {
    Network out = net;
    for (auto& bus : out.buses)
        if (bus.is_slack) bus.vref = vref;
    return out;
}

std::vector<ExponentRecord> run_exponent_sweep(const Network& net, std::span<const double> alphas) {
    std::vector<ExponentRecord> records;
    for (double alpha : alphas) {
        const Network swept = with_uniform_exponent(net, alpha);
        ExponentRecord rec;
        rec.alpha = alpha;
        const auto lp = run_model(swept, Model::lp_d_e);
        const auto ac = run_model(swept, Model::ac_d_e);
        if (lp.ok) rec.obj_lp = lp.obs.objective;
        if (ac.ok) rec.obj_ac = ac.obs.objective;
        rec.ac_converged = ac.ok;
        rec.ac_losses = ac.ac_losses;
        records.push_back(rec);
    }
    return records;
}

void write_exponent_csv(const std::vector<ExponentRecord>& records, const std::string& path) {
    csv::Writer out(path);
    out.row({"alpha", "obj_lp", "obj_ac"});
    for (const auto& r : records) out.row({csv::fixed(r.alpha, 6), opt_fixed(r.obj_lp), opt_fixed(r.obj_ac)});
    out.close();
}

namespace {

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
}

std::optional<double> dw_between(const ModelResult& lp, const ModelResult& ac) {
    if (!lp.ok || !ac.ok) return std::nullopt;
    try {
        return delta_metric(lp.obs.w, ac.obs.w).value;
    } catch (const EmptyAfterExclusion&) {
        return std::nullopt;
    }
}

} // namespace

VufSweep run_vuf_sweep(const Network& net, std::span<const double> targets, int samples, std::uint64_t seed,
                       unsigned threads) {
    if (samples < 1) throw InputError("samples must be positive");
    for (double t : targets)
        if (!(t >= 0.0 && t <= 15.0)) throw InputError("target VUF must lie in [0, 15]");
    const Vec3c vref = *net.bus(net.root).vref;
    const std::size_t per = static_cast<std::size_t>(samples);

    VufSweep sweep;
    sweep.samples.resize(targets.size() * per);
    parallel_for(sweep.samples.size(), threads, [&](std::size_t k) {
        const std::size_t t = k / per;
        const std::size_t s = k % per;
        VufSample& out = sweep.samples[k];
        out.target = targets[t];
        out.sample = static_cast<int>(s);
        std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(s)};
        std::mt19937_64 rng(seq);
        try {
            const Network perturbed = with_vref(net, perturb_vref_to_vuf(vref, targets[t], rng));
            const auto lp = run_model(perturbed, Model::lp_d_e);
            const auto ac = run_model(perturbed, Model::ac_d_e);
            out.dw = dw_between(lp, ac);
            out.converged = out.dw.has_value();
        } catch (const Error&) {
            out.converged = false;
        }
    });

    for (std::size_t t = 0; t < targets.size(); ++t) {
        VufSummary sum;
        sum.target = targets[t];
        std::vector<double> values;
        for (std::size_t s = 0; s < per; ++s) {
            const auto& smp = sweep.samples[t * per + s];
            if (smp.converged) values.push_back(*smp.dw);
            else ++sum.n_failed;
        }
        sum.n_ok = values.size();
        if (!values.empty()) {
            sum.min = *std::min_element(values.begin(), values.end());
            sum.max = *std::max_element(values.begin(), values.end());
            sum.p10 = percentile(values, 0.10);
            sum.median = percentile(values, 0.50);
            sum.p90 = percentile(values, 0.90);
        }
        sweep.summary.push_back(sum);
    }
    return sweep;
}

void write_vuf_csv(const VufSweep& sweep, const std::string& path) {
    csv::Writer out(path);
    out.row({"target_vuf", "sample", "dw_pct", "converged"});
    for (const auto& s : sweep.samples)
        out.row({csv::fixed(s.target, 6), std::to_string(s.sample), opt_fixed(s.dw), s.converged ? "true" : "false"});
    out.row({"target_vuf", "n_ok", "n_failed", "min", "p10", "median", "p90", "max"});
    for (const auto& s : sweep.summary) {
        const bool any = s.n_ok > 0;
        auto v = [any](double x) { return any ? csv::fixed(x) : std::string{}; };
        out.row({csv::fixed(s.target, 6), std::to_string(s.n_ok), std::to_string(s.n_failed), v(s.min), v(s.p10),
                 v(s.median), v(s.p90), v(s.max)});
    }
    out.close();
}

std::vector<VrefRecord> run_vref_sweep(const Network& net, std::span<const double> factors) {
    const Vec3c vref = *net.bus(net.root).vref;
    std::vector<VrefRecord> records;
    for (double m : factors) {
        if (!(m > 0.0 && m <= 1.0)) throw InputError("vref factor must lie in (0, 1]");
        const Network scaled = with_vref(net, vref * m);
        const auto lp = run_model(scaled, Model::lp_d_e);
        const auto ac = run_model(scaled, Model::ac_d_e);
        VrefRecord rec;
        rec.m = m;
        rec.dw = dw_between(lp, ac);
        rec.converged_lp = lp.ok && lp.within_limits;
        rec.converged_ac = ac.ok && ac.within_limits;
        records.push_back(rec);
    }
    return records;
}

void write_vref_csv(const std::vector<VrefRecord>& records, const std::string& path) {
    csv::Writer out(path);
    out.row({"m", "dw_pct", "converged_lp", "converged_ac"});
    for (const auto& r : records)
        out.row({csv::fixed(r.m, 6), opt_fixed(r.dw), r.converged_lp ? "true" : "false",
                 r.converged_ac ? "true" : "false"});
    out.close();
}

std::vector<double> grid(double from, double to, double step) {
    step = std::abs(step);
    if (!(step > 0.0)) throw InputError("grid step must be nonzero");
    const double span = std::abs(to - from);
    const auto n = static_cast<long>(std::floor(span / step + 1e-9));
    const double dir = to >= from ? 1.0 : -1.0;
    std::vector<double> out;
    for (long k = 0; k <= n; ++k) out.push_back(from + dir * static_cast<double>(k) * step);
    return out;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw InputError("percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

unsigned thread_count_from_env() {
    const char* env = std::getenv("MDOPF_THREADS");
    if (!env || !*env) return 0;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || v < 0) return 0;
    return static_cast<unsigned>(v);
}

} // namespace mdopf::exp
