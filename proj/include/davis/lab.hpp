// SPDX-License-Identifier: MIT
/// @file lab.hpp
/// @brief Experiment configuration, pipelines and artifact output behind the
///        davis_lab command-line tool.
///
/// A run produces a JSON summary that embeds its fully resolved
/// configuration, plus CSV tables written next to it as `<stem>.<table>.csv`.
/// Every file is written to a temporary sibling and renamed into place.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "davis/brownian.hpp"
#include "davis/davis.hpp"
#include "davis/error.hpp"
#include "davis/market.hpp"
#include "davis/optim.hpp"
#include "davis/superrep.hpp"
#include "davis/utility.hpp"

namespace davis::lab {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaLine = "# davis-lab schema v1";

enum class Command { Solve, Dual, Superrep, Davis, Sweep, MC, Corrector };

inline const char* to_string(Command c) {
    switch (c) {
        case Command::Solve: return "solve";
        case Command::Dual: return "dual";
        case Command::Superrep: return "superrep";
        case Command::Davis: return "davis";
        case Command::Sweep: return "sweep";
        case Command::MC: return "mc";
        case Command::Corrector: return "corrector";
    }
    return "?";
}

inline Command command_from_string(const std::string& s) {
    for (Command c : {Command::Solve, Command::Dual, Command::Superrep, Command::Davis, Command::Sweep, Command::MC,
                      Command::Corrector}) {
        if (s == to_string(c)) return c;
    }
    fail(ErrorKind::Config, "unknown command '" + s + "'");
}

/// Exit status for an error kind: 2 model, 3 numeric, 4 configuration.
inline int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Model: return 2;
        case ErrorKind::Config:
        case ErrorKind::Argument: return 4;
        default: return 3;
    }
}

struct ExperimentConfig {
    Command command = Command::Davis;
    std::optional<json> market;               ///< inline market: probs, dS, endowment, optional claim
    std::optional<std::string> family;
    std::vector<std::size_t> levels;
    std::string utility = "log";
    double gamma = 0.5;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 20240601;
    std::vector<double> eps_list{0.1, 0.05, 0.025};
    std::optional<std::string> out;
    double tol = 1e-9;
    json model = json::object();              ///< Brownian model overrides
    std::string payoff = "tanh";
    std::string endowment = "constant";
};

namespace detail {

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Config, "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Config, "malformed JSON in '" + path + "': " + e.what());
    }
}

template <class T>
T get_as(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, std::string("bad value for '") + key + "': " + e.what());
    }
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    require(j.is_object(), ErrorKind::Config, where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        require(ok, ErrorKind::Config, "unknown key '" + key + "' in " + where);
    }
}

inline json load_market_json(const json& v) {
    json m = v.is_string() ? read_json_file(v.get<std::string>()) : v;
    reject_unknown(m, {"probs", "dS", "endowment", "claim"}, "market");
    require(m.contains("probs") && m.contains("dS"), ErrorKind::Config, "market needs probs and dS");
    return m;
}

}  // namespace detail

/// Validates `j` against the configuration schema; unknown keys are rejected.
/// A run summary (an object with a "config" member) is accepted as well.
inline ExperimentConfig parse_config(const json& input) {
    const bool summary = input.is_object() && input.contains("schema") && input.contains("config");
    const json& j = summary ? input.at("config") : input;
    detail::reject_unknown(j,
                           {"command", "market", "family", "levels", "utility", "gamma", "n_paths", "seed",
                            "eps_list", "out", "tol", "model", "payoff", "endowment"},
                           "configuration");
    ExperimentConfig c;
    if (j.contains("command")) c.command = command_from_string(detail::get_as<std::string>(j, "command"));
    if (j.contains("market")) c.market = detail::load_market_json(j.at("market"));
    if (j.contains("family")) c.family = detail::get_as<std::string>(j, "family");
    if (j.contains("levels")) c.levels = detail::get_as<std::vector<std::size_t>>(j, "levels");
    if (j.contains("utility")) c.utility = detail::get_as<std::string>(j, "utility");
    if (j.contains("gamma")) c.gamma = detail::get_as<double>(j, "gamma");
    if (j.contains("n_paths")) c.n_paths = detail::get_as<std::size_t>(j, "n_paths");
    if (j.contains("seed")) c.seed = detail::get_as<std::uint64_t>(j, "seed");
    if (j.contains("eps_list")) c.eps_list = detail::get_as<std::vector<double>>(j, "eps_list");
    if (j.contains("out")) c.out = detail::get_as<std::string>(j, "out");
    if (j.contains("tol")) c.tol = detail::get_as<double>(j, "tol");
    if (j.contains("model")) {
        c.model = j.at("model");
        detail::reject_unknown(c.model, {"lambda_spec", "lambda", "n_steps", "horizon", "nu", "s_max", "bridge"},
                               "model");
    }
    if (j.contains("payoff")) c.payoff = detail::get_as<std::string>(j, "payoff");
    if (j.contains("endowment")) c.endowment = detail::get_as<std::string>(j, "endowment");
    require(c.utility == "log" || c.utility == "power", ErrorKind::Config, "utility must be log or power");
    require(c.tol > 0.0, ErrorKind::Config, "tol must be positive");
    return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    try {
        return parse_config(json::parse(text));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Config, std::string("malformed JSON: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path) { return parse_config(detail::read_json_file(path)); }

/// Fully resolved configuration; parse_config(to_json(c)) reproduces c.
inline json to_json(const ExperimentConfig& c) {
    json j;
    j["command"] = to_string(c.command);
    if (c.market) j["market"] = *c.market;
    if (c.family) j["family"] = *c.family;
    j["levels"] = c.levels;
    j["utility"] = c.utility;
    j["gamma"] = c.gamma;
    j["n_paths"] = c.n_paths;
    j["seed"] = c.seed;
    j["eps_list"] = c.eps_list;
    if (c.out) j["out"] = *c.out;
    j["tol"] = c.tol;
    j["model"] = c.model;
    j["payoff"] = c.payoff;
    j["endowment"] = c.endowment;
    return j;
}

// ---------------------------------------------------------------------------
// registries

inline Utility make_utility(const ExperimentConfig& c) {
    if (c.utility == "log") return Utility::log();
    try {
        return Utility::power(c.gamma);
    } catch (const Error& e) {
        fail(ErrorKind::Config, e.what());
    }
}

inline FiniteMarket make_market(const ExperimentConfig& c) {
    require(c.market.has_value(), ErrorKind::Config, "this command needs --market");
    const json& m = *c.market;
    const auto probs = detail::get_as<std::vector<double>>(m, "probs");
    const auto dS = detail::get_as<std::vector<double>>(m, "dS");
    std::vector<double> b = m.contains("endowment") ? detail::get_as<std::vector<double>>(m, "endowment")
                                                    : std::vector<double>(probs.size(), 1.0);
    std::optional<std::vector<double>> claim;
    if (m.contains("claim")) claim = detail::get_as<std::vector<double>>(m, "claim");
    return FiniteMarket(probs, dS, b, claim);
}

inline std::function<double(double)> make_payoff(const std::string& name) {
    if (name == "tanh") return [](double a) { return std::tanh(a); };
    if (name == "gauss") return [](double a) { return std::exp(-a * a); };
    if (name == "zero") return [](double) { return 0.0; };
    if (name == "one") return [](double) { return 1.0; };
    fail(ErrorKind::Config, "unknown payoff '" + name + "' (tanh, gauss, zero, one)");
}

inline EnvelopeFunctions make_envelope(const std::string& endowment, const std::string& payoff) {
    EnvelopeFunctions env;
    if (endowment == "kinked") {
        env = kinked_envelope();
    } else if (endowment == "smooth") {
        env = smooth_envelope();
    } else if (endowment == "constant") {
        env = {"constant", [](double) { return 1.0; }, nullptr};
    } else {
        fail(ErrorKind::Config, "unknown endowment '" + endowment + "' (constant, kinked, smooth)");
    }
    env.phi_fn = make_payoff(payoff);
    return env;
}

inline PathModel make_path_model(const ExperimentConfig& c, LambdaSpec default_spec) {
    PathModel m;
    m.seed = c.seed;
    m.lambda_spec = default_spec;
    if (default_spec == LambdaSpec::Constant) m.lambda = 0.5;
    const json& j = c.model;
    if (j.contains("lambda_spec")) {
        const auto s = detail::get_as<std::string>(j, "lambda_spec");
        require(s == "constant" || s == "ds_stopped", ErrorKind::Config, "lambda_spec must be constant or ds_stopped");
        m.lambda_spec = s == "constant" ? LambdaSpec::Constant : LambdaSpec::DSStopped;
    }
    if (j.contains("lambda")) m.lambda = detail::get_as<double>(j, "lambda");
    if (j.contains("n_steps")) m.n_steps = detail::get_as<std::size_t>(j, "n_steps");
    if (j.contains("horizon")) m.horizon = detail::get_as<double>(j, "horizon");
    if (j.contains("s_max")) m.s_max = detail::get_as<double>(j, "s_max");
    if (j.contains("bridge")) m.bridge_correction = detail::get_as<bool>(j, "bridge");
    m.validate();
    return m;
}

inline std::optional<NuSpec> make_nu(const ExperimentConfig& c) {
    if (!c.model.contains("nu")) return std::nullopt;
    const auto s = detail::get_as<std::string>(c.model, "nu");
    for (NuSpec n : {NuSpec::Zero, NuSpec::DsStrict, NuSpec::DsLiteral}) {
        if (s == to_string(n)) return n;
    }
    fail(ErrorKind::Config, "unknown nu '" + s + "' (zero, ds_strict, ds_literal)");
}

// ---------------------------------------------------------------------------
// results and artifacts

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct RunResult {
    json summary;
    std::map<std::string, Table> tables;
};

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string to_csv(const Table& t) {
    std::ostringstream os;
    os << kSchemaLine << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_number(r[i]);
        os << '\n';
    }
    return os.str();
}

/// Writes `content` to a temporary sibling of `path` and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), ErrorKind::Config, "cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        require(static_cast<bool>(out), ErrorKind::Config, "write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorKind::Config, "cannot move output into '" + path.string() + "'");
    }
}

/// `dir/name.json` -> `dir/name`; other paths are used as they are.
inline std::filesystem::path output_stem(const std::filesystem::path& out) {
    std::filesystem::path stem = out;
    if (stem.extension() == ".json") stem.replace_extension();
    return stem;
}

inline std::filesystem::path table_path(const std::filesystem::path& out, const std::string& table) {
    std::filesystem::path p = output_stem(out);
    p += "." + table + ".csv";
    return p;
}

/// Writes the summary and every table. All content is rendered before the first write.
inline std::vector<std::filesystem::path> write_artifacts(const std::filesystem::path& out, const RunResult& r) {
    std::vector<std::pair<std::filesystem::path, std::string>> files;
    files.emplace_back(out, r.summary.dump(2) + "\n");
    for (const auto& [name, t] : r.tables) files.emplace_back(table_path(out, name), to_csv(t));
    std::vector<std::filesystem::path> written;
    for (const auto& [p, content] : files) {
        write_atomic(p, content);
        written.push_back(p);
    }
    return written;
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json interval_json(const DavisInterval& d) {
    json j;
    j["method"] = to_string(d.method);
    j["p_low"] = finite_or_null(d.p_low);
    j["p_high"] = finite_or_null(d.p_high);
    j["width"] = finite_or_null(d.width());
    j["y_B"] = finite_or_null(d.y_B);
    json diag = json::object();
    for (const auto& [k, v] : d.diagnostics) diag[k] = finite_or_null(v);
    j["diagnostics"] = diag;
    j["flags"] = d.flags;
    return j;
}

inline Table deflator_table(const DeflatorStats& s) {
    Table t{{"t", "E_Y", "ci"}, {}};
    t.rows.push_back({0.0, s.Y0, 0.0});
    for (std::size_t k = 0; k < 3; ++k) {
        t.rows.push_back({kCheckpoints[k], s.checkpoints[k].mean * s.Y0, s.checkpoints[k].half * s.Y0});
    }
    t.rows.push_back({1.0, s.E_YT, s.ci_halfwidth});
    return t;
}

inline json deflator_json(const DeflatorStats& s) {
    json j;
    j["Y0"] = s.Y0;
    j["E_YT"] = s.E_YT;
    j["ci_halfwidth"] = s.ci_halfwidth;
    j["n_paths"] = s.n_paths;
    j["ratio"] = s.ratio();
    j["min_YT"] = s.min_YT;
    j["freq_first_low"] = s.freq_first_low;
    j["freq_first_high"] = s.freq_first_high;
    j["n_unresolved"] = s.n_unresolved;
    return j;
}

// ---------------------------------------------------------------------------
// pipelines

namespace detail {

inline std::vector<double> claim_of(const FiniteMarket& m) {
    require(m.claim.has_value(), ErrorKind::Config, "market has no claim");
    return *m.claim;
}

inline RunResult run_solve(const ExperimentConfig& c) {
    const FiniteMarket m = make_market(c);
    const PrimalSolution p = solve_primal(m, make_utility(c));
    RunResult r;
    r.summary["value"] = p.value;
    r.summary["pi_hat"] = p.pi_hat;
    r.summary["foc_residual"] = p.foc_residual;
    r.summary["iterations"] = p.iterations;
    Table t{{"state", "prob", "dS", "endowment", "X_hat"}, {}};
    for (std::size_t n = 0; n < m.size(); ++n) {
        t.rows.push_back({static_cast<double>(n), m.probs[n], m.dS[n], m.endowment[n], p.X_hat[n]});
    }
    r.tables["states"] = t;
    return r;
}

inline RunResult run_dual(const ExperimentConfig& c) {
    const FiniteMarket m = make_market(c);
    const DualSolution d = solve_dual(m, make_utility(c));
    RunResult r;
    r.summary["value"] = d.value;
    r.summary["eta"] = d.eta;
    r.summary["total_mass"] = d.total_mass;
    r.summary["kkt_residual"] = d.kkt_residual;
    Table t{{"state", "prob", "dS", "density", "wealth"}, {}};
    for (std::size_t n = 0; n < m.size(); ++n) {
        t.rows.push_back({static_cast<double>(n), m.probs[n], m.dS[n], d.density[n], d.wealth[n]});
    }
    r.tables["states"] = t;
    return r;
}

inline RunResult run_superrep(const ExperimentConfig& c) {
    const FiniteMarket m = make_market(c);
    const std::vector<double> psi = claim_of(m);
    const SuperrepResult s = superreplicate(m, psi, c.tol);
    RunResult r;
    r.summary["price"] = s.price;
    r.summary["portfolio"] = s.portfolio;
    r.summary["unique"] = to_string(s.unique);
    r.summary["certificate"] = s.certificate;
    r.summary["dual_price"] = s.dual_price;
    Table t{{"state", "dS", "claim", "superrep", "pointwise_inf"}, {}};
    for (std::size_t n = 0; n < m.size(); ++n) {
        t.rows.push_back({static_cast<double>(n), m.dS[n], psi[n], s.superrep_payoff[n], s.pointwise_inf[n]});
    }
    r.tables["states"] = t;
    return r;
}

inline RunResult run_davis(const ExperimentConfig& c) {
    const FiniteMarket m = make_market(c);
    const Utility u = make_utility(c);
    const std::vector<double> phi = claim_of(m);
    RunResult r;
    const DavisInterval dual = davis_interval_finite(m, u, m.endowment, phi);
    r.summary["interval"] = interval_json(dual);
    json methods = json::array();
    methods.push_back(interval_json(dual));
    methods.push_back(interval_json(interval_via_supergradient(m, u, m.endowment, phi)));
    methods.push_back(interval_json(interval_finite_difference(m, u, m.endowment, phi)));
    r.summary["methods"] = methods;
    r.summary["singleton"] = dual.width() <= c.tol;
    return r;
}

inline RunResult run_sweep(const ExperimentConfig& c) {
    require(c.family.value_or("csw") == "csw", ErrorKind::Config, "sweep supports the csw family only");
    const CountableMarketFamily fam = csw_family();
    std::vector<std::size_t> levels = c.levels.empty() ? std::vector<std::size_t>{200, 500, 1000} : c.levels;
    const SweepReport rep = csw_sweep(levels);
    RunResult r;
    r.summary["family"] = fam.name;
    r.summary["test_function"] = to_string(rep.test_function);
    r.summary["test_function_found"] = rep.test_function_found;
    r.summary["gap_relative_spread"] = rep.gap_relative_spread;
    r.summary["pairing_amplitude"] = rep.pairing_amplitude;
    json rows = json::array();
    Table t{{"N", "y_N", "pairing_H", "du_plus", "du_minus", "gap"}, {}};
    for (const SweepRow& row : rep.rows) {
        rows.push_back({{"N", row.N},
                        {"gap", row.gap},
                        {"error", row.error},
                        {"concavity_residual", row.concavity_residual}});
        t.rows.push_back({static_cast<double>(row.N), row.y_N, row.pairing_H, row.du_plus, row.du_minus, row.gap});
    }
    r.summary["rows"] = rows;
    r.tables["sweep"] = t;
    return r;
}

inline RunResult run_mc(const ExperimentConfig& c) {
    RunResult r;
    const auto phi = make_payoff(c.payoff);
    if (c.endowment == "constant") {
        const PathModel m = make_path_model(c, LambdaSpec::DSStopped);
        const Example1Result e = example1_interval(m, phi, c.n_paths);
        r.summary["pipeline"] = "constant_endowment";
        r.summary["interval"] = interval_json(e.interval);
        r.summary["width_direct"] = e.width_direct.mean;
        r.summary["width_direct_ci"] = e.width_direct.half;
        r.summary["width_closed"] = e.width_closed;
        r.summary["combined_ci"] = e.combined_ci;
        r.summary["width_consistent"] = e.consistent;
        r.summary["deflator"] = deflator_json(e.independent);
        r.tables["deflator"] = deflator_table(e.independent);
    } else {
        const PathModel m = make_path_model(c, LambdaSpec::Constant);
        const std::optional<NuSpec> nu = make_nu(c).value_or(NuSpec::DsStrict);
        const Example2Result e = example2_interval(m, make_envelope(c.endowment, c.payoff), nu, c.n_paths);
        r.summary["pipeline"] = "random_endowment";
        r.summary["nu"] = to_string(e.nu);
        r.summary["interval"] = interval_json(e.interval);
        r.summary["envelope"] = {{"slope_plus", e.envelope.plus},
                                 {"slope_minus", e.envelope.minus},
                                 {"value", e.envelope.value},
                                 {"bound_ok", e.envelope.bound_ok},
                                 {"concave", e.envelope.concave}};
        r.summary["deflator"] = deflator_json(e.stats);
        r.tables["deflator"] = deflator_table(e.stats);
    }
    return r;
}

inline RunResult run_corrector(const ExperimentConfig& c) {
    const PathModel m = make_path_model(c, LambdaSpec::Constant);
    const std::string endowment = c.endowment == "constant" ? "kinked" : c.endowment;
    const CorrectorReport rep =
        corrector_check(m, make_envelope(endowment, c.payoff), c.eps_list, c.n_paths, make_utility(c));
    RunResult r;
    r.summary["kappa_hat"] = rep.kappa_hat;
    r.summary["theta_hat"] = rep.theta_hat;
    r.summary["base_value"] = rep.base_value;
    r.summary["slope_plus"] = rep.slope_plus;
    r.summary["decreasing"] = rep.decreasing;
    r.summary["halved"] = rep.halved;
    r.summary["violations"] = rep.violations;
    Table t{{"eps", "value", "corrector_value", "residual", "residual_ci", "ratio"}, {}};
    for (const CorrectorRow& row : rep.rows) {
        t.rows.push_back({row.eps, row.value, row.corrector_value, row.residual, row.residual_ci, row.ratio});
    }
    r.tables["corrector"] = t;
    return r;
}

}  // namespace detail

/// Executes the configured pipeline; the summary embeds the resolved configuration.
inline RunResult run(const ExperimentConfig& c) {
    RunResult r;
    switch (c.command) {
        case Command::Solve: r = detail::run_solve(c); break;
        case Command::Dual: r = detail::run_dual(c); break;
        case Command::Superrep: r = detail::run_superrep(c); break;
        case Command::Davis: r = detail::run_davis(c); break;
        case Command::Sweep: r = detail::run_sweep(c); break;
        case Command::MC: r = detail::run_mc(c); break;
        case Command::Corrector: r = detail::run_corrector(c); break;
    }
    json summary;
    summary["schema"] = "davis-lab v1";
    summary["command"] = to_string(c.command);
    summary["config"] = to_json(c);
    for (auto& [k, v] : r.summary.items()) summary[k] = v;
    r.summary = std::move(summary);
    return r;
}

// ---------------------------------------------------------------------------
// canned experiments

enum class CannedExperiment { ThreeState, CSW, Example1, Example2, Corrector };

inline const char* to_string(CannedExperiment e) {
    switch (e) {
        case CannedExperiment::ThreeState: return "ThreeState";
        case CannedExperiment::CSW: return "CSW";
        case CannedExperiment::Example1: return "Example1";
        case CannedExperiment::Example2: return "Example2";
        case CannedExperiment::Corrector: return "Corrector";
    }
    return "?";
}

inline CannedExperiment example_from_string(const std::string& s) {
    for (CannedExperiment e : {CannedExperiment::ThreeState, CannedExperiment::CSW, CannedExperiment::Example1,
                           CannedExperiment::Example2, CannedExperiment::Corrector}) {
        if (s == to_string(e)) return e;
    }
    fail(ErrorKind::Config, "unknown example '" + s + "' (ThreeState, CSW, Example1, Example2, Corrector)");
}

struct Criterion {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct Reproduction {
    std::vector<Criterion> criteria;
    RunResult result;

    [[nodiscard]] bool pass() const {
        return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass; });
    }
};

inline std::string fmt(double v) { return format_number(v); }

/// Runs the canned configuration of `e` and evaluates its assertions.
inline Reproduction reproduce(CannedExperiment e, std::uint64_t seed = 20240601) {
    Reproduction rep;
    switch (e) {
        case CannedExperiment::ThreeState: {
            ExperimentConfig c;
            c.command = Command::Superrep;
            c.market = json{{"probs", {1.0 / 3, 1.0 / 3, 1.0 / 3}},
                            {"dS", {1.0, 0.0, -1.0}},
                            {"endowment", {1.0, 1.0, 1.0}},
                            {"claim", {-1.0, 0.0, -1.0}}};
            rep.result = run(c);
            const std::string verdict = rep.result.summary["unique"];
            rep.criteria.push_back({"three-state payoff is not uniquely superreplicable", verdict == "NotUnique",
                                    "verdict " + verdict});
            ExperimentConfig flip = c;
            (*flip.market)["claim"] = {-1.0, 0.0, 1.0};
            const std::string v2 = run(flip).summary["unique"];
            rep.criteria.push_back({"replicable perturbation is recognised", v2 == "Replicable", "verdict " + v2});
            break;
        }
        case CannedExperiment::CSW: {
            ExperimentConfig c;
            c.command = Command::Sweep;
            c.family = "csw";
            c.levels = {200, 500, 1000};
            rep.result = run(c);
            const json& s = rep.result.summary;
            bool positive = true;
            std::string detail;
            for (const auto& row : s["rows"]) {
                const double gap = row["gap"];
                const double err = row["error"];
                positive = positive && gap > 3.0 * err;
                detail += "N=" + std::to_string(row["N"].get<std::size_t>()) + " gap " + fmt(gap) + " err " + fmt(err) +
                          "; ";
            }
            rep.criteria.push_back({"one-sided derivative gap exceeds 3x its error bound", positive, detail});
            const double spread = s["gap_relative_spread"];
            rep.criteria.push_back({"gap stable across levels", spread < 0.1, "relative spread " + fmt(spread)});
            break;
        }
        case CannedExperiment::Example1: {
            ExperimentConfig c;
            c.command = Command::MC;
            c.seed = seed;
            c.model = {{"lambda_spec", "ds_stopped"}};
            rep.result = run(c);
            const json& s = rep.result.summary;
            const double wd = s["width_direct"];
            const double wc = s["width_closed"];
            const double ci = s["combined_ci"];
            rep.criteria.push_back({"direct width matches closed-form width", s["width_consistent"].get<bool>(),
                                    "direct " + fmt(wd) + " closed " + fmt(wc) + " combined CI " + fmt(ci)});
            rep.criteria.push_back({"interval is non-degenerate", wd > ci, "width " + fmt(wd)});
            break;
        }
        case CannedExperiment::Example2: {
            ExperimentConfig c;
            c.command = Command::MC;
            c.seed = seed;
            c.endowment = "kinked";
            c.model = {{"lambda_spec", "constant"}, {"lambda", 0.5}, {"nu", "ds_strict"}};
            rep.result = run(c);
            const json& s = rep.result.summary;
            const double width = s["interval"]["width"];
            const double kink = s["envelope"]["slope_minus"].get<double>() - s["envelope"]["slope_plus"].get<double>();
            const double ratio = s["deflator"]["ratio"];
            const double ci = s["interval"]["diagnostics"]["p_low_ci"].get<double>() +
                              s["interval"]["diagnostics"]["p_high_ci"].get<double>();
            const double floor = kink * (1.0 - ratio) - ci;
            rep.criteria.push_back({"width bounded below by kink times singular mass", width >= floor,
                                    "width " + fmt(width) + " floor " + fmt(floor)});
            break;
        }
        case CannedExperiment::Corrector: {
            ExperimentConfig c;
            c.command = Command::Corrector;
            c.seed = seed;
            c.endowment = "kinked";
            c.model = {{"lambda_spec", "constant"}, {"lambda", 0.5}};
            rep.result = run(c);
            const json& s = rep.result.summary;
            std::string ratios;
            for (const auto& row : rep.result.tables["corrector"].rows) ratios += fmt(row[5]) + " ";
            rep.criteria.push_back({"residual ratio decreases", s["decreasing"].get<bool>(), "r/eps " + ratios});
            rep.criteria.push_back({"final ratio below half the first", s["halved"].get<bool>(), "r/eps " + ratios});
            break;
        }
    }
    json crit = json::array();
    for (const Criterion& c : rep.criteria) crit.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    rep.result.summary["example"] = to_string(e);
    rep.result.summary["criteria"] = crit;
    return rep;
}

}  // namespace davis::lab
