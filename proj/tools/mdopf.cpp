// mdopf: linear and AC multiphase power flow on radial feeders.
//
//   mdopf solve   --feeder F --model {lp-d-e|lp-d|ac-d-e|ac-d|ac-w-e} --out CSV
//   mdopf compare --feeder F --out CSV
//   mdopf sweep exponent|vuf|vref --feeder F [...] --seed N --out CSV
//
// Exit status: 0 success, 2 solver error, 3 parse/validation error.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mdopf/errors.hpp"
#include "mdopf/experiments.hpp"
#include "mdopf/feeder_io.hpp"

namespace {

constexpr int kSolverFailure = 2;
constexpr int kInputFailure = 3;

std::string feeder_name(const std::string& path) { return std::filesystem::path(path).stem().string(); }

mdopf::exp::Model model_or_throw(const std::string& name) {
    auto m = mdopf::exp::parse_model(name);
    if (!m) throw mdopf::InputError("unknown model '" + name + "'");
    return *m;
}

int run_solve(const std::string& feeder, const std::string& model_name, const std::string& out) {
    using namespace mdopf;
    const Network net = io::parse_feeder(feeder);
    const auto model = model_or_throw(model_name);
    if (exp::is_linear(model)) {
        io::write_solution_csv(lp::solve(net, exp::lp_config(model)), net, out);
        return 0;
    }
    const auto state = ac::sweep_solve(net, exp::ac_config(model));
    io::write_solution_csv(state, net, out);
    ac::require_converged(state);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiphase radial power flow: linear model with delta/exponential loads and AC oracle"};
    app.require_subcommand(1);

    std::string feeder, out, model = "lp-d-e";
    std::vector<std::string> models{"lp-d-e", "lp-d", "ac-d-e", "ac-d", "ac-w-e"};
    bool timing = false;

    auto* solve = app.add_subcommand("solve", "solve one model and write the bus/load solution");
    solve->add_option("--feeder", feeder, "feeder JSON file")->required();
    solve->add_option("--model", model, "lp-d-e, lp-d, ac-d-e, ac-d or ac-w-e")->capture_default_str();
    solve->add_option("--out", out, "output CSV")->required();

    auto* compare = app.add_subcommand("compare", "compare every model against its AC reference");
    compare->add_option("--feeder", feeder, "feeder JSON file")->required();
    compare->add_option("--models", models, "models to include")->delimiter(',')->capture_default_str();
    compare->add_option("--out", out, "output CSV")->required();
    compare->add_flag("--timing", timing, "fill the ms column with measured wall time");

    auto* sweep = app.add_subcommand("sweep", "parameter sweeps");
    sweep->require_subcommand(1);
    std::uint64_t seed = 1;
    struct Range {
        double from, to, step;
    };
    Range alpha_range{0.0, 3.0, 0.25};
    Range factor_range{1.0, 0.9, 0.025};
    std::vector<double> targets{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int samples = 100;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--feeder", feeder, "feeder JSON file")->required();
        cmd->add_option("--seed", seed, "random seed")->capture_default_str();
        cmd->add_option("--out", out, "output CSV")->required();
    };
    auto* sw_exp = sweep->add_subcommand("exponent", "uniform load exponent alpha = beta");
    add_common(sw_exp);
    sw_exp->add_option("--from", alpha_range.from, "first exponent")->capture_default_str();
    sw_exp->add_option("--to", alpha_range.to, "last exponent")->capture_default_str();
    sw_exp->add_option("--step", alpha_range.step, "exponent step")->capture_default_str();

    auto* sw_vuf = sweep->add_subcommand("vuf", "random reference-angle unbalance");
    add_common(sw_vuf);
    sw_vuf->add_option("--targets", targets, "target VUF values in percent")->delimiter(',')->capture_default_str();
    sw_vuf->add_option("--samples", samples, "samples per target")->capture_default_str();

    auto* sw_vref = sweep->add_subcommand("vref", "reference magnitude reduction");
    add_common(sw_vref);
    sw_vref->add_option("--from", factor_range.from, "first factor")->capture_default_str();
    sw_vref->add_option("--to", factor_range.to, "last factor")->capture_default_str();
    sw_vref->add_option("--step", factor_range.step, "factor decrement")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    using namespace mdopf;
    try {
        if (*solve) return run_solve(feeder, model, out);

        const Network net = io::parse_feeder(feeder);
        if (*compare) {
            std::vector<exp::Model> list;
            for (const auto& m : models) list.push_back(model_or_throw(m));
            exp::write_nominal_csv(exp::run_nominal_comparison(net, feeder_name(feeder), list), out, timing);
        } else if (*sw_exp) {
            const auto alphas = exp::grid(alpha_range.from, alpha_range.to, alpha_range.step);
            exp::write_exponent_csv(exp::run_exponent_sweep(net, alphas), out);
        } else if (*sw_vuf) {
            exp::write_vuf_csv(exp::run_vuf_sweep(net, targets, samples, seed, exp::thread_count_from_env()), out);
        } else if (*sw_vref) {
            const auto factors = exp::grid(factor_range.from, factor_range.to, factor_range.step);
            exp::write_vref_csv(exp::run_vref_sweep(net, factors), out);
        }
        return 0;
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const InputError& e) {
        std::cerr << "mdopf: " << e.what() << '\n';
        return kInputFailure;
    } catch (const IoError& e) {
        std::cerr << "mdopf: " << e.what() << '\n';
        return kInputFailure;
    } catch (const Error& e) {
        std::cerr << "mdopf: " << e.what() << '\n';
        return kSolverFailure;
    }
}
