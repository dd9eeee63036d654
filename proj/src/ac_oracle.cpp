#include "mdopf/ac_oracle.hpp"

#include <cmath>
#include <string>

#include "mdopf/delta_wye.hpp"
#include "mdopf/errors.hpp"
#include "mdopf/load_models.hpp"

namespace mdopf::ac {

namespace {

constexpr double kMinLoadVoltage = 1e-6;
constexpr double kDivergedVoltage = 1e3;

Vec3c mask(const Vec3c& v, PhaseSet phases) {
    Vec3c out = Vec3c::Zero();
    for (int p = 0; p < 3; ++p)
        if (phases.contains(p)) out(p) = v(p);
    return out;
}

LoadSpec effective(const LoadSpec& load, const SweepConfig& config) {
    return config.delta_as_wye ? loads::as_wye(load) : load;
}

struct LoadResult {
    Vec3c sd;
    Vec3c current;  // drawn from the bus
};

LoadResult evaluate_load(const LoadSpec& load, const Vec3c& v, const SweepConfig& config) {
    const bool is_delta = load.configuration == Configuration::delta;
    const Vec3c applied = is_delta ? Vec3c(delta::lambda_matrix().cast<Complex>() * v) : v;
    LoadResult r;
    if (config.load_mode == LoadMode::constant) {
        r.sd = load.s0;
    } else {
        r.sd = loads::exact_power(load, applied.cwiseAbs2());
    }
    for (int p = 0; p < 3; ++p) {
        if (r.sd(p) != Complex{} && std::abs(applied(p)) < kMinLoadVoltage)
            throw ZeroVoltagePhase("load '" + load.id + "' sees zero voltage on " +
                                   (is_delta ? "branch " : "phase ") + phase_name(phase_at(p)));
    }
    if (is_delta) {
        r.current = delta::delta_bus_current(v, r.sd);
    } else {
        r.current = Vec3c::Zero();
        for (int p = 0; p < 3; ++p)
            if (r.sd(p) != Complex{}) r.current(p) = std::conj(r.sd(p) / v(p));
    }
    return r;
}

struct Topology {
    OrientedTree tree;
    std::vector<std::vector<std::size_t>> loads_at;
    std::vector<std::vector<std::size_t>> shunts_at;
};

Topology topology(const Network& net) {
    Topology t{orient_toward_root(net), {}, {}};
    t.loads_at.resize(net.buses.size());
    t.shunts_at.resize(net.buses.size());
    for (std::size_t l = 0; l < net.loads.size(); ++l) t.loads_at[*net.bus_index(net.loads[l].bus)].push_back(l);
    for (std::size_t s = 0; s < net.shunts.size(); ++s) t.shunts_at[*net.bus_index(net.shunts[s].bus)].push_back(s);
    return t;
}

// Current leaving bus b into everything except the series branches.
Vec3c local_withdrawal(const Network& net, const Topology& topo, const std::vector<Vec3c>& v, std::size_t b,
                       const std::vector<Vec3c>& load_current) {
    Vec3c j = Vec3c::Zero();
    for (std::size_t l : topo.loads_at[b]) j += load_current[l];
    for (std::size_t s : topo.shunts_at[b]) j += net.shunts[s].y * v[b];
    const auto& tree = topo.tree;
    if (tree.parent_line[b] != OrientedTree::npos) j += tree.lines[tree.parent_line[b]].ysh_to * v[b];
    for (std::size_t c : tree.children[b]) j += tree.lines[tree.parent_line[c]].ysh_from * v[b];
    return j;
}

struct Backward {
    std::vector<Vec3c> series;  // by line index
    Vec3c root_total;
};

Backward backward_pass(const Network& net, const Topology& topo, const std::vector<Vec3c>& v,
                       const std::vector<Vec3c>& load_current) {
    const auto& tree = topo.tree;
    Backward out;
    out.series.assign(net.lines.size(), Vec3c::Zero());
    std::vector<Vec3c> subtree(net.buses.size(), Vec3c::Zero());
    for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
        const std::size_t b = *it;
        Vec3c total = local_withdrawal(net, topo, v, b, load_current);
        for (std::size_t c : tree.children[b]) total += subtree[c];
        subtree[b] = mask(total, net.buses[b].phases);
        if (tree.parent_line[b] != OrientedTree::npos) out.series[tree.parent_line[b]] = subtree[b];
    }
    out.root_total = subtree[net.root_index()];
    return out;
}

} // namespace

PhasorState sweep_solve(const Network& net, const SweepConfig& config) {
    if (auto report = validate(net); !report.ok()) throw ValidationError(std::move(report));
    if (!net.generators.empty())
        throw NonSquareSystem("the sweep supports the slack source only; network has dispatchable generators");
    if (!(config.tol > 0.0) || config.max_iter < 1) throw SolverError("invalid sweep configuration");

    const Topology topo = topology(net);
    const auto& tree = topo.tree;
    const std::size_t root = net.root_index();
    const Vec3c vref = *net.buses[root].vref;

    std::vector<LoadSpec> loads;
    loads.reserve(net.loads.size());
    for (const auto& l : net.loads) loads.push_back(effective(l, config));

    PhasorState state;
    state.config = config;
    state.v.resize(net.buses.size());
    for (std::size_t b = 0; b < net.buses.size(); ++b) state.v[b] = mask(vref, net.buses[b].phases);

    std::vector<Vec3c> load_current(loads.size());
    auto evaluate_loads = [&](const std::vector<Vec3c>& v) {
        state.sd.resize(loads.size());
        for (std::size_t l = 0; l < loads.size(); ++l) {
            const std::size_t b = *net.bus_index(loads[l].bus);
            auto r = evaluate_load(loads[l], v[b], config);
            state.sd[l] = r.sd;
            load_current[l] = r.current;
        }
    };

    for (int iter = 1; iter <= config.max_iter; ++iter) {
        state.iterations = iter;
        evaluate_loads(state.v);
        const Backward bw = backward_pass(net, topo, state.v, load_current);

        std::vector<Vec3c> next(net.buses.size());
        next[root] = state.v[root];
        for (std::size_t pos = 1; pos < tree.order.size(); ++pos) {
            const std::size_t b = tree.order[pos];
            const std::size_t e = tree.parent_line[b];
            next[b] = mask(next[tree.parent[b]] - tree.lines[e].z_series * bw.series[e], net.buses[b].phases);
        }

        double change = 0.0;
        bool finite = true;
        for (std::size_t b = 0; b < next.size(); ++b) {
            change = std::max(change, (next[b] - state.v[b]).cwiseAbs().maxCoeff());
            finite = finite && next[b].allFinite() && next[b].cwiseAbs().maxCoeff() < kDivergedVoltage;
        }
        if (!finite) break;
        state.v = std::move(next);
        if (change <= config.tol) {
            state.converged = true;
            break;
        }
    }

    evaluate_loads(state.v);
    const Backward bw = backward_pass(net, topo, state.v, load_current);
    state.i_line = bw.series;
    state.sb.resize(loads.size());
    for (std::size_t l = 0; l < loads.size(); ++l) {
        const std::size_t b = *net.bus_index(loads[l].bus);
        state.sb[l] = state.v[b].cwiseProduct(load_current[l].conjugate());
    }
    state.s_slack = state.v[root].cwiseProduct(bw.root_total.conjugate());
    state.max_mismatch = power_mismatch(state, net);
    return state;
}

double power_mismatch(const PhasorState& state, const Network& net) {
    const Topology topo = topology(net);
    const auto& tree = topo.tree;
    const std::size_t root = net.root_index();
    std::vector<Vec3c> residual(net.buses.size(), Vec3c::Zero());

    auto shunt_power = [](const Mat3c& y, const Vec3c& v) -> Vec3c {
        return v.cwiseProduct((y * v).conjugate());
    };

    for (std::size_t e = 0; e < net.lines.size(); ++e) {
        const Line& line = tree.lines[e];
        const std::size_t j = tree.line_child[e];
        const std::size_t i = tree.parent[j];
        std::vector<int> idx;
        for (int p = 0; p < 3; ++p)
            if (line.phases.contains(p)) idx.push_back(p);
        const auto k = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXcd zs(k, k);
        Eigen::VectorXcd dv(k);
        for (Eigen::Index r = 0; r < k; ++r) {
            dv(r) = state.v[i](idx[r]) - state.v[j](idx[r]);
            for (Eigen::Index c = 0; c < k; ++c) zs(r, c) = line.z_series(idx[r], idx[c]);
        }
        const Eigen::VectorXcd is = zs.fullPivLu().solve(dv);
        Vec3c current = Vec3c::Zero();
        for (Eigen::Index r = 0; r < k; ++r) current(idx[r]) = is(r);
        residual[i] += state.v[i].cwiseProduct(current.conjugate()) + shunt_power(line.ysh_from, state.v[i]);
        residual[j] += -state.v[j].cwiseProduct(current.conjugate()) + shunt_power(line.ysh_to, state.v[j]);
    }
    for (const auto& s : net.shunts) {
        const std::size_t b = *net.bus_index(s.bus);
        residual[b] += shunt_power(s.y, state.v[b]);
    }
    for (std::size_t l = 0; l < net.loads.size(); ++l) {
        const LoadSpec load = effective(net.loads[l], state.config);
        const std::size_t b = *net.bus_index(load.bus);
        const auto r = evaluate_load(load, state.v[b], state.config);
        residual[b] += state.v[b].cwiseProduct(r.current.conjugate());
    }
    residual[root] -= state.s_slack;

    double worst = 0.0;
    for (std::size_t b = 0; b < residual.size(); ++b)
        for (int p = 0; p < 3; ++p)
            if (net.buses[b].phases.contains(p)) worst = std::max(worst, std::abs(residual[b](p)));
    return worst;
}

double total_line_losses(const PhasorState& state, const Network& net) {
    const auto tree = orient_toward_root(net);
    double loss = 0.0;
    for (std::size_t e = 0; e < net.lines.size(); ++e) {
        const std::size_t j = tree.line_child[e];
        const std::size_t i = tree.parent[j];
        const Vec3c dv = state.v[i] - state.v[j];
        loss += dv.cwiseProduct(state.i_line[e].conjugate()).real().sum();
    }
    return loss;
}

double total_shunt_draw(const PhasorState& state, const Network& net) {
    const auto tree = orient_toward_root(net);
    auto draw = [](const Mat3c& y, const Vec3c& v) { return v.cwiseProduct((y * v).conjugate()).real().sum(); };
    double total = 0.0;
    for (std::size_t e = 0; e < net.lines.size(); ++e) {
        const std::size_t j = tree.line_child[e];
        total += draw(tree.lines[e].ysh_from, state.v[tree.parent[j]]) + draw(tree.lines[e].ysh_to, state.v[j]);
    }
    for (const auto& s : net.shunts) total += draw(s.y, state.v[*net.bus_index(s.bus)]);
    return total;
}

void require_converged(const PhasorState& state) {
    if (!state.converged)
        throw NotConverged("sweep did not converge in " + std::to_string(state.iterations) + " iterations");
}

} // namespace mdopf::ac
