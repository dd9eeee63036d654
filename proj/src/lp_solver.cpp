#include "mdopf/lp_solver.hpp"

#include <array>
#include <cmath>
#include <utility>

#include <Eigen/SparseLU>

#include "mdopf/delta_wye.hpp"
#include "mdopf/errors.hpp"
#include "mdopf/load_models.hpp"

namespace mdopf::lp {

namespace {

using Term = std::pair<std::size_t, Complex>;
using ComplexExpr = std::vector<Term>;

constexpr Complex kI{0.0, 1.0};

// Stored upper-triangle pairs and their real/imag slots within a bus block.
struct OffDiagSlot {
    int row;
    int col;
    std::size_t re;
    std::size_t im;
};
constexpr std::array<OffDiagSlot, 3> kOffDiag{{{0, 1, 3, 4}, {1, 2, 5, 6}, {0, 2, 7, 8}}};

// W(r, c) as a complex combination of the real unknowns of one bus block.
ComplexExpr w_entry(std::size_t offset, int r, int c) {
    if (r == c) return {{offset + static_cast<std::size_t>(r), Complex{1.0, 0.0}}};
    for (const auto& slot : kOffDiag) {
        if (slot.row == r && slot.col == c) return {{offset + slot.re, 1.0}, {offset + slot.im, kI}};
        if (slot.row == c && slot.col == r) return {{offset + slot.re, 1.0}, {offset + slot.im, -kI}};
    }
    return {};
}

void append(ComplexExpr& dst, const ComplexExpr& src, Complex scale) {
    for (const auto& [idx, coef] : src) dst.emplace_back(idx, coef * scale);
}

// diag(W Y^H)_phi = sum_k W(phi, k) conj(Y(phi, k))
void append_shunt_draw(ComplexExpr& dst, std::size_t w_off, const Mat3c& y, int phi) {
    for (int k = 0; k < 3; ++k)
        if (y(phi, k) != Complex{}) append(dst, w_entry(w_off, phi, k), std::conj(y(phi, k)));
}

class Builder {
public:
    explicit Builder(std::size_t n) : n_(n) {}

    void real_row(const ComplexExpr& expr, double rhs) {
        for (const auto& [idx, coef] : expr)
            if (coef.real() != 0.0) triplets_.emplace_back(static_cast<int>(rows_), static_cast<int>(idx), coef.real());
        rhs_.push_back(rhs);
        ++rows_;
    }

    void imag_row(const ComplexExpr& expr, double rhs) {
        for (const auto& [idx, coef] : expr)
            if (coef.imag() != 0.0) triplets_.emplace_back(static_cast<int>(rows_), static_cast<int>(idx), coef.imag());
        rhs_.push_back(rhs);
        ++rows_;
    }

    void complex_rows(const ComplexExpr& expr, Complex rhs) {
        real_row(expr, rhs.real());
        imag_row(expr, rhs.imag());
    }

    void fix(std::size_t idx, double value) { real_row({{idx, 1.0}}, value); }

    SparseLinearSystem finish(SystemLayout layout) {
        if (rows_ != n_) throw NonSquareSystem("assembled " + std::to_string(rows_) + " equations for " +
                                                std::to_string(n_) + " unknowns");
        SparseLinearSystem sys;
        sys.matrix.resize(static_cast<int>(n_), static_cast<int>(n_));
        sys.matrix.setFromTriplets(triplets_.begin(), triplets_.end());
        sys.matrix.makeCompressed();
        sys.rhs = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), static_cast<Eigen::Index>(rhs_.size()));
        sys.layout = std::move(layout);
        return sys;
    }

private:
    std::size_t n_;
    std::size_t rows_ = 0;
    std::vector<Eigen::Triplet<double>> triplets_;
    std::vector<double> rhs_;
};

ComplexExpr flow_entry(std::size_t line_off, int phi) {
    return {{line_off + static_cast<std::size_t>(phi), 1.0}, {line_off + 3 + static_cast<std::size_t>(phi), kI}};
}

} // namespace

Mat3c unpack_w(const Eigen::VectorXd& x, std::size_t off) {
    Mat3c w = Mat3c::Zero();
    for (int p = 0; p < 3; ++p) w(p, p) = x(static_cast<Eigen::Index>(off) + p);
    for (const auto& slot : kOffDiag) {
        const Complex v{x(static_cast<Eigen::Index>(off + slot.re)), x(static_cast<Eigen::Index>(off + slot.im))};
        w(slot.row, slot.col) = v;
        w(slot.col, slot.row) = std::conj(v);
    }
    return w;
}

SparseLinearSystem assemble(const Network& net, const ModelConfig& config) {
    if (auto report = validate(net); !report.ok()) throw ValidationError(std::move(report));
    if (!net.generators.empty())
        throw NonSquareSystem("network has " + std::to_string(net.generators.size()) +
                              " dispatchable generator(s); only the slack source is supported");

    const auto tree = orient_toward_root(net);
    const std::size_t nb = net.buses.size();
    const std::size_t root = net.root_index();

    SystemLayout layout;
    layout.w_offset.resize(nb);
    for (std::size_t i = 0; i < nb; ++i) layout.w_offset[i] = 9 * tree.position[i];
    std::size_t next = 9 * nb;
    layout.line_offset.resize(net.lines.size());
    for (std::size_t e = 0; e < net.lines.size(); ++e) {
        layout.line_offset[e] = next;
        next += 6;
    }
    layout.load_offset.resize(net.loads.size());
    for (std::size_t l = 0; l < net.loads.size(); ++l) {
        layout.load_offset[l] = next;
        next += 15;
    }
    layout.slack_offset = next;
    next += 6;
    layout.size = next;

    Builder eq(layout.size);
    const Mat3c& gamma = delta::gamma_matrix();

    // Reference voltage at the slack bus.
    {
        const Vec3c& vref = *net.buses[root].vref;
        const std::size_t off = layout.w_offset[root];
        for (int p = 0; p < 3; ++p) eq.fix(off + p, std::norm(vref(p)));
        for (const auto& slot : kOffDiag) {
            const Complex v = vref(slot.row) * std::conj(vref(slot.col));
            eq.fix(off + slot.re, v.real());
            eq.fix(off + slot.im, v.imag());
        }
    }

    // Voltage propagation W_j = W_i - M Z^H - Z M^H with M = Gamma diag(S).
    for (std::size_t e = 0; e < net.lines.size(); ++e) {
        const Line& line = tree.lines[e];
        const std::size_t j = tree.line_child[e];
        const std::size_t i = tree.parent[j];
        const PhaseSet pj = net.buses[j].phases;
        const std::size_t wi = layout.w_offset[i];
        const std::size_t wj = layout.w_offset[j];
        const std::size_t fo = layout.line_offset[e];
        const Mat3c& z = line.z_series;

        auto propagation = [&](int phi, int psi) {
            ComplexExpr expr = w_entry(wj, phi, psi);
            append(expr, w_entry(wi, phi, psi), -1.0);
            for (int k = 0; k < 3; ++k) {
                if (!line.phases.contains(k)) continue;
                const Complex mz = gamma(phi, k) * std::conj(z(psi, k));
                const Complex zm = z(phi, k) * std::conj(gamma(psi, k));
                const Complex coef_p = mz + zm;
                const Complex coef_q = kI * mz - kI * zm;
                if (coef_p != Complex{}) expr.emplace_back(fo + k, coef_p);
                if (coef_q != Complex{}) expr.emplace_back(fo + 3 + k, coef_q);
            }
            return expr;
        };

        for (int p = 0; p < 3; ++p) {
            if (pj.contains(p)) eq.real_row(propagation(p, p), 0.0);
            else eq.fix(wj + p, 0.0);
        }
        for (const auto& slot : kOffDiag) {
            if (pj.contains(slot.row) && pj.contains(slot.col)) {
                eq.complex_rows(propagation(slot.row, slot.col), Complex{});
            } else {
                eq.fix(wj + slot.re, 0.0);
                eq.fix(wj + slot.im, 0.0);
            }
        }
    }

    // Per-bus power balance. At a non-root bus it determines the supply line flow.
    std::vector<std::vector<std::size_t>> incident(nb), shunts_at(nb), loads_at(nb);
    for (std::size_t e = 0; e < net.lines.size(); ++e) {
        incident[tree.line_child[e]].push_back(e);
        incident[tree.parent[tree.line_child[e]]].push_back(e);
    }
    for (std::size_t s = 0; s < net.shunts.size(); ++s) shunts_at[*net.bus_index(net.shunts[s].bus)].push_back(s);
    for (std::size_t l = 0; l < net.loads.size(); ++l) loads_at[*net.bus_index(net.loads[l].bus)].push_back(l);

    for (std::size_t pos = 0; pos < nb; ++pos) {
        const std::size_t b = tree.order[pos];
        const PhaseSet pb = net.buses[b].phases;
        const std::size_t wb = layout.w_offset[b];
        for (int p = 0; p < 3; ++p) {
            if (b != root && !pb.contains(p)) {
                const std::size_t fo = layout.line_offset[tree.parent_line[b]];
                eq.fix(fo + p, 0.0);
                eq.fix(fo + 3 + p, 0.0);
                continue;
            }
            ComplexExpr expr;
            if (b == root) {
                expr.emplace_back(layout.slack_offset + p, -1.0);
                expr.emplace_back(layout.slack_offset + 3 + p, -kI);
            }
            for (std::size_t e : incident[b]) {
                const Line& line = tree.lines[e];
                const bool is_parent_side = tree.line_child[e] != b;
                append(expr, flow_entry(layout.line_offset[e], p), is_parent_side ? 1.0 : -1.0);
                append_shunt_draw(expr, wb, is_parent_side ? line.ysh_from : line.ysh_to, p);
            }
            for (std::size_t s : shunts_at[b]) append_shunt_draw(expr, wb, net.shunts[s].y, p);
            for (std::size_t l : loads_at[b]) {
                const std::size_t sb = layout.load_offset[l] + SystemLayout::kSbOffset;
                expr.emplace_back(sb + p, 1.0);
                expr.emplace_back(sb + 3 + p, kI);
            }
            eq.complex_rows(expr, Complex{});
        }
    }

    // Loads.
    const auto& dmap = delta::delta_map();
    for (std::size_t l = 0; l < net.loads.size(); ++l) {
        const LoadSpec load = config.delta_as_wye ? loads::as_wye(net.loads[l]) : net.loads[l];
        const bool is_delta = load.configuration == Configuration::delta;
        const std::size_t base = layout.load_offset[l];
        const std::size_t sd = base + SystemLayout::kSdOffset;
        const std::size_t sb = base + SystemLayout::kSbOffset;
        const std::size_t v = base + SystemLayout::kVOffset;
        const std::size_t wb = layout.w_offset[*net.bus_index(load.bus)];

        for (int p = 0; p < 3; ++p) {
            if (load.phases.contains(p)) eq.real_row({{v + p, 1.0}, {wb + p, is_delta ? -3.0 : -1.0}}, 0.0);
            else eq.fix(v + p, 0.0);
        }

        const auto rows = loads::tangent(load, loads::expansion_point(load, config.linearization_point));
        for (int p = 0; p < 3; ++p) {
            if (!load.phases.contains(p)) {
                eq.fix(sd + p, 0.0);
                eq.fix(sd + 3 + p, 0.0);
            } else if (config.load_mode == LoadMode::constant) {
                eq.fix(sd + p, load.s0(p).real());
                eq.fix(sd + 3 + p, load.s0(p).imag());
            } else {
                eq.real_row({{sd + p, 1.0}, {v + p, -rows[p].p_slope}}, rows[p].p_offset);
                eq.real_row({{sd + 3 + p, 1.0}, {v + p, -rows[p].q_slope}}, rows[p].q_offset);
            }
        }

        for (int r = 0; r < 6; ++r) {
            ComplexExpr expr;
            if (is_delta) {
                for (int c = 0; c < 6; ++c) {
                    if (dmap.a(r, c) != 0.0) expr.emplace_back(sb + c, dmap.a(r, c));
                    if (dmap.b(r, c) != 0.0) expr.emplace_back(sd + c, -dmap.b(r, c));
                }
            } else {
                expr = {{sb + r, 1.0}, {sd + r, -1.0}};
            }
            eq.real_row(expr, 0.0);
        }
    }

    return eq.finish(std::move(layout));
}

LinearSolution solve(const SparseLinearSystem& system) {
    const auto& m = system.matrix;
    const auto n = m.rows();
    {
        std::vector<bool> row_used(n, false), col_used(n, false);
        for (int k = 0; k < m.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
                row_used[it.row()] = true;
                col_used[it.col()] = true;
            }
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!row_used[i]) throw StructurallySingular("empty equation row " + std::to_string(i));
            if (!col_used[i]) throw StructurallySingular("unknown " + std::to_string(i) + " appears in no equation");
        }
    }

    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.setPivotThreshold(1.0);
    lu.analyzePattern(m);
    lu.factorize(m);
    if (lu.info() != Eigen::Success) throw NumericallySingular("sparse LU failed: " + lu.lastErrorMessage());
    const Eigen::VectorXd x = lu.solve(system.rhs);
    if (lu.info() != Eigen::Success || !x.allFinite()) throw NumericallySingular("sparse LU solve failed");

    const double residual = (m * x - system.rhs).cwiseAbs().maxCoeff();
    const double rhs_norm = system.rhs.size() ? system.rhs.cwiseAbs().maxCoeff() : 0.0;
    if (!(residual <= 1e-9 * std::max(1.0, rhs_norm)))
        throw NumericallySingular("residual " + std::to_string(residual) + " exceeds tolerance");

    const auto& layout = system.layout;
    LinearSolution sol;
    sol.residual = residual;
    sol.w.reserve(layout.w_offset.size());
    for (std::size_t off : layout.w_offset) sol.w.push_back(unpack_w(x, off));
    auto complex3 = [&x](std::size_t off) {
        Vec3c s;
        for (int p = 0; p < 3; ++p)
            s(p) = Complex{x(static_cast<Eigen::Index>(off) + p), x(static_cast<Eigen::Index>(off) + 3 + p)};
        return s;
    };
    for (std::size_t off : layout.line_offset) sol.s_flow.push_back(complex3(off));
    for (std::size_t off : layout.load_offset) {
        sol.sd.push_back(complex3(off + SystemLayout::kSdOffset));
        sol.sb.push_back(complex3(off + SystemLayout::kSbOffset));
        sol.v_load.push_back(x.segment<3>(static_cast<Eigen::Index>(off + SystemLayout::kVOffset)));
    }
    sol.s_slack = complex3(layout.slack_offset);
    sol.objective = sol.s_slack.real().sum();
    return sol;
}

LinearSolution solve(const Network& network, const ModelConfig& config) {
    LinearSolution sol = solve(assemble(network, config));
    for (std::size_t e = 0; e < network.lines.size(); ++e)
        for (int p = 0; p < 3; ++p)
            if (!network.lines[e].phases.contains(p)) sol.s_flow[e](p) = Complex{};
    return sol;
}

LimitReport check_operational_limits(const LinearSolution& sol, const Network& net) {
    LimitReport report;
    for (std::size_t b = 0; b < net.buses.size(); ++b) {
        const Bus& bus = net.buses[b];
        for (int p = 0; p < 3; ++p) {
            if (!bus.phases.contains(p)) continue;
            const double w = sol.w[b](p, p).real();
            const double lo = bus.vmin(p) * bus.vmin(p);
            const double hi = bus.vmax(p) * bus.vmax(p);
            if (w < lo) report.violations.push_back({bus.id, phase_at(p), w, lo, lo - w, true});
            else if (w > hi) report.violations.push_back({bus.id, phase_at(p), w, hi, w - hi, false});
        }
    }
    return report;
}

} // namespace mdopf::lp
