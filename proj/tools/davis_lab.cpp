// SPDX-License-Identifier: MIT
/// @file davis_lab.cpp
/// @brief Command-line front end: solvers, price intervals, sweeps and
///        Monte-Carlo experiments with JSON/CSV artifacts.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "davis/lab.hpp"

namespace {

using davis::lab::ExperimentConfig;

struct Flags {
    std::string market;
    std::string family;
    std::string utility;
    double gamma = 0.0;
    std::vector<std::size_t> levels;
    std::size_t paths = 0;
    std::uint64_t seed = 0;
    std::vector<double> eps;
    std::string out;
    double tol = 0.0;
    std::string config;
};

void add_common(CLI::App& app, Flags& f) {
    app.add_option("--market", f.market, "market JSON file (probs, dS, endowment, claim)");
    app.add_option("--family", f.family, "registered countable family (csw)");
    app.add_option("--utility", f.utility, "log or power")->check(CLI::IsMember({"log", "power"}));
    app.add_option("--gamma", f.gamma, "power utility exponent");
    app.add_option("--levels", f.levels, "truncation levels, comma separated")->delimiter(',');
    app.add_option("--paths", f.paths, "Monte-Carlo paths");
    app.add_option("--seed", f.seed, "random seed");
    app.add_option("--eps", f.eps, "perturbation sizes, comma separated")->delimiter(',');
    app.add_option("--out", f.out, "summary JSON path; tables go to <stem>.<table>.csv");
    app.add_option("--tol", f.tol, "tolerance override");
    app.add_option("--config", f.config, "experiment configuration JSON (flags override it)");
}

ExperimentConfig resolve(const CLI::App& app, const Flags& f, const std::optional<std::string>& command) {
    ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : davis::lab::load_config(f.config);
    if (command) c.command = davis::lab::command_from_string(*command);
    if (app.count("--market") != 0U) {
        c.market = davis::lab::parse_config(davis::lab::json{{"market", f.market}}).market;
    }
    if (app.count("--family") != 0U) c.family = f.family;
    if (app.count("--utility") != 0U) c.utility = f.utility;
    if (app.count("--gamma") != 0U) c.gamma = f.gamma;
    if (app.count("--levels") != 0U) c.levels = f.levels;
    if (app.count("--paths") != 0U) c.n_paths = f.paths;
    if (app.count("--seed") != 0U) c.seed = f.seed;
    if (app.count("--eps") != 0U) c.eps_list = f.eps;
    if (app.count("--out") != 0U) c.out = f.out;
    if (app.count("--tol") != 0U) c.tol = f.tol;
    return davis::lab::parse_config(davis::lab::to_json(c));
}

void emit(const davis::lab::RunResult& r, const std::optional<std::string>& out) {
    if (!out) {
        std::cout << r.summary.dump(2) << '\n';
        return;
    }
    for (const auto& p : davis::lab::write_artifacts(*out, r)) std::cout << "wrote " << p.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Davis price intervals for claims under random endowments"};
    app.require_subcommand(0, 1);
    Flags flags;
    add_common(app, flags);

    const std::vector<std::pair<std::string, std::string>> commands{
        {"solve", "optimal wealth and holdings"},
        {"dual", "dual optimizer and state-price density"},
        {"superrep", "superreplication price and uniqueness verdict"},
        {"davis", "Davis price interval by three methods"},
        {"sweep", "derivative gap along truncations of a countable family"},
        {"mc", "Monte-Carlo statistics of the deflator"},
        {"corrector", "first-order corrector residuals"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();
    std::string example;
    CLI::App* rep = app.add_subcommand("reproduce", "run a canned experiment and check its assertions");
    rep->fallthrough();
    rep->add_option("example", example, "ThreeState, CSW, Example1, Example2 or Corrector")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 4;
    }

    try {
        if (rep->parsed()) {
            const auto ex = davis::lab::example_from_string(example);
            const std::uint64_t seed = app.count("--seed") != 0U ? flags.seed : 20240601;
            const davis::lab::Reproduction r = davis::lab::reproduce(ex, seed);
            for (const auto& c : r.criteria) {
                std::cout << (c.pass ? "PASS" : "FAIL") << "  " << davis::lab::to_string(ex) << ": " << c.name
                          << " (" << c.detail << ")\n";
            }
            if (app.count("--out") != 0U) davis::lab::write_artifacts(flags.out, r.result);
            return r.pass() ? 0 : 1;
        }
        std::optional<std::string> command;
        for (const auto& [name, help] : commands) {
            if (app.got_subcommand(name)) command = name;
        }
        if (!command && flags.config.empty()) {
            std::cerr << "error: give a command or --config\n" << app.help();
            return 4;
        }
        const ExperimentConfig cfg = resolve(app, flags, command);
        emit(davis::lab::run(cfg), cfg.out);
        return 0;
    } catch (const davis::Error& e) {
        std::cerr << e.what() << '\n';
        return davis::lab::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
}
