#include "dense_lp_oracle.hpp"

#include <deque>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace mdopf::testing {

namespace {

const Complex kG{-0.5, -std::numbers::sqrt3 / 2.0};
constexpr int kUpper[3][2] = {{0, 1}, {0, 2}, {1, 2}};

struct Tree {
    std::vector<int> parent_line;  // -1 at the root
    std::vector<int> parent_bus;
    std::vector<std::vector<int>> child_lines;
};

Tree build_tree(const Network& net) {
    const std::size_t n = net.buses.size();
    Tree t{std::vector<int>(n, -1), std::vector<int>(n, -1), std::vector<std::vector<int>>(n)};
    std::vector<bool> seen(n, false);
    const auto root = static_cast<int>(*net.bus_index(net.root));
    std::deque<int> queue{root};
    seen[root] = true;
    while (!queue.empty()) {
        const int b = queue.front();
        queue.pop_front();
        for (std::size_t e = 0; e < net.lines.size(); ++e) {
            const auto& l = net.lines[e];
            const int from = static_cast<int>(*net.bus_index(l.from_bus));
            const int to = static_cast<int>(*net.bus_index(l.to_bus));
            int other = -1;
            if (from == b) other = to;
            else if (to == b) other = from;
            if (other < 0 || seen[other]) continue;
            seen[other] = true;
            t.parent_line[other] = static_cast<int>(e);
            t.parent_bus[other] = b;
            t.child_lines[b].push_back(static_cast<int>(e));
            queue.push_back(other);
        }
    }
    return t;
}

struct Unknowns {
    std::vector<Mat3c> w;
    std::vector<Vec3c> s;
    std::vector<Vec3c> sd, sb;
    std::vector<Vec3> v;
    Vec3c slack;
};

std::size_t unknown_count(const Network& net) {
    return 9 * net.buses.size() + 6 * net.lines.size() + 15 * net.loads.size() + 6;
}

Unknowns unpack(const Eigen::VectorXd& z, const Network& net) {
    Unknowns u;
    std::size_t k = 0;
    for (std::size_t b = 0; b < net.buses.size(); ++b) {
        Mat3c w = Mat3c::Zero();
        for (int p = 0; p < 3; ++p) w(p, p) = z(k++);
        for (const auto& rc : kUpper) {
            const Complex x{z(k), z(k + 1)};
            k += 2;
            w(rc[0], rc[1]) = x;
            w(rc[1], rc[0]) = std::conj(x);
        }
        u.w.push_back(w);
    }
    auto complex3 = [&] {
        Vec3c s;
        for (int p = 0; p < 3; ++p) s(p) = Complex{z(k + p), z(k + 3 + p)};
        k += 6;
        return s;
    };
    for (std::size_t e = 0; e < net.lines.size(); ++e) u.s.push_back(complex3());
    for (std::size_t l = 0; l < net.loads.size(); ++l) {
        u.sd.push_back(complex3());
        u.sb.push_back(complex3());
        u.v.push_back(Vec3(z(k), z(k + 1), z(k + 2)));
        k += 3;
    }
    u.slack = complex3();
    return u;
}

Mat3c gamma() {
    Mat3c g;
    g << 1.0, kG * kG, kG, kG, 1.0, kG * kG, kG * kG, kG, 1.0;
    return g;
}

Vec3c shunt_draw(const Mat3c& w, const Mat3c& y) { return (w * y.adjoint()).diagonal(); }

LoadSpec reconnect_as_wye(LoadSpec l) {
    if (l.configuration == Configuration::delta) {
        l.configuration = Configuration::wye;
        l.v0mag /= std::numbers::sqrt3;
    }
    return l;
}

struct Residual {
    std::vector<double> r;
    void complex(Complex x) {
        r.push_back(x.real());
        r.push_back(x.imag());
    }
    void hermitian(const Mat3c& m) {
        for (int p = 0; p < 3; ++p) r.push_back(m(p, p).real());
        for (const auto& rc : kUpper) complex(m(rc[0], rc[1]));
    }
};

Eigen::VectorXd residual(const Eigen::VectorXd& z, const Network& net, const Tree& tree, const lp::ModelConfig& cfg) {
    const Unknowns u = unpack(z, net);
    const std::size_t n = net.buses.size();
    const auto root = *net.bus_index(net.root);
    const Mat3c g = gamma();

    // Net withdrawal at each bus from shunts and loads.
    std::vector<Vec3c> draw(n, Vec3c::Zero());
    for (std::size_t e = 0; e < net.lines.size(); ++e) {
        const auto& l = net.lines[e];
        const auto f = *net.bus_index(l.from_bus), t = *net.bus_index(l.to_bus);
        draw[f] += shunt_draw(u.w[f], l.ysh_from);
        draw[t] += shunt_draw(u.w[t], l.ysh_to);
    }
    for (const auto& s : net.shunts) {
        const auto b = *net.bus_index(s.bus);
        draw[b] += shunt_draw(u.w[b], s.y);
    }
    for (std::size_t l = 0; l < net.loads.size(); ++l) draw[*net.bus_index(net.loads[l].bus)] += u.sb[l];

    Residual res;
    const Vec3c& vref = *net.buses[root].vref;
    res.hermitian(u.w[root] - vref * vref.adjoint());
    Vec3c root_out = draw[root];
    for (int e : tree.child_lines[root]) root_out += u.s[e];
    for (int p = 0; p < 3; ++p) res.complex(u.slack(p) - root_out(p));

    for (std::size_t j = 0; j < n; ++j) {
        if (j == root) continue;
        const int e = tree.parent_line[j];
        const auto i = static_cast<std::size_t>(tree.parent_bus[j]);
        const Line& line = net.lines[e];
        const Mat3c m = g * u.s[e].asDiagonal();
        const Mat3c prop = u.w[j] - u.w[i] + m * line.z_series.adjoint() + line.z_series * m.adjoint();
        Mat3c eqs = prop;
        const PhaseSet pj = net.buses[j].phases;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                if (!(pj.contains(r) && pj.contains(c))) eqs(r, c) = u.w[j](r, c);
        res.hermitian(eqs);

        Vec3c out = draw[j] - u.s[e];
        for (int f : tree.child_lines[j]) out += u.s[f];
        for (int p = 0; p < 3; ++p) res.complex(line.phases.contains(p) ? out(p) : u.s[e](p));
    }

    const Complex to_bus_same = 1.0 / (1.0 - kG);
    const Complex to_bus_prev = -1.0 / (kG * kG - 1.0);
    for (std::size_t l = 0; l < net.loads.size(); ++l) {
        const LoadSpec load = cfg.delta_as_wye ? reconnect_as_wye(net.loads[l]) : net.loads[l];
        const bool is_delta = load.configuration == Configuration::delta;
        const double k = is_delta ? 3.0 : 1.0;
        const auto b = *net.bus_index(load.bus);
        for (int p = 0; p < 3; ++p)
            res.r.push_back(load.phases.contains(p) ? u.v[l](p) - k * u.w[b](p, p).real() : u.v[l](p));
        const double pt = k * cfg.linearization_point;
        for (int p = 0; p < 3; ++p) {
            Complex target = load.s0(p);
            if (!load.phases.contains(p)) {
                target = 0.0;
            } else if (cfg.load_mode == lp::LoadMode::linearized_exponential && load.model == LoadModel::exponential) {
                const double a = load.s0(p).real() / std::pow(load.v0mag(p), load.alpha(p));
                const double bq = load.s0(p).imag() / std::pow(load.v0mag(p), load.beta(p));
                auto tangent = [&](double coef, double ex) {
                    const double h = ex / 2.0;
                    return coef * std::pow(pt, h) + coef * h * std::pow(pt, h - 1.0) * (u.v[l](p) - pt);
                };
                target = {tangent(a, load.alpha(p)), tangent(bq, load.beta(p))};
            }
            res.complex(u.sd[l](p) - target);
        }
        for (int p = 0; p < 3; ++p) {
            const Complex implied = is_delta ? to_bus_same * u.sd[l](p) + to_bus_prev * u.sd[l]((p + 2) % 3) : u.sd[l](p);
            res.complex(u.sb[l](p) - implied);
        }
    }

    return Eigen::Map<const Eigen::VectorXd>(res.r.data(), static_cast<Eigen::Index>(res.r.size()));
}

} // namespace

DenseLpSolution dense_lp_solve(const Network& net, const lp::ModelConfig& config) {
    const Tree tree = build_tree(net);
    const auto n = static_cast<Eigen::Index>(unknown_count(net));
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd f0 = residual(zero, net, tree, config);
    if (f0.size() != n) throw std::logic_error("dense oracle is not square");

    Eigen::MatrixXd jac(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::VectorXd probe = zero;
        probe(k) = 1.0;
        jac.col(k) = residual(probe, net, tree, config) - f0;
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible()) throw std::runtime_error("dense oracle system is singular");
    const Eigen::VectorXd z = lu.solve(-f0);

    const Unknowns u = unpack(z, net);
    DenseLpSolution out;
    out.w = u.w;
    out.s_flow = u.s;
    out.sd = u.sd;
    out.sb = u.sb;
    out.v_load = u.v;
    out.s_slack = u.slack;
    out.residual = residual(z, net, tree, config).lpNorm<Eigen::Infinity>();
    return out;
}

} // namespace mdopf::testing
