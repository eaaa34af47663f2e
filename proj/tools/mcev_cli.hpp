#pragma once

// Command-line front end.  run_cli() is the whole program; main() only forwards
// to it so the tests can drive the commands in-process.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcev/config.hpp"
#include "mcev/mcev.hpp"

namespace mcev::cli {

enum ExitCode { kOk = 0, kDomain = 1, kUsage = 2 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline int max_terms_from_env() {
    const char* v = std::getenv("MCEV_MAX_TERMS");
    if (!v || !*v) return kDefaultMaxTerms;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1) throw UsageError("MCEV_MAX_TERMS must be a positive integer");
    return static_cast<int>(n);
}

inline Date date_or_throw(const std::string& s, const char* flag) {
    const auto d = parse_date(s);
    if (!d) throw UsageError(std::string(flag) + ": expected YYYY-MM-DD, got '" + s + "'");
    return *d;
}

/// Monday-to-Friday dates from start to end inclusive.
inline std::vector<Date> business_days(const Date& start, const Date& end) {
    using namespace std::chrono;
    std::vector<Date> out;
    for (sys_days d{start}; d <= sys_days{end}; d += days{1}) {
        const weekday wd{d};
        if (wd != Saturday && wd != Sunday) out.emplace_back(d);
    }
    return out;
}

inline void emit(std::ostream& out, const json& j, const std::string& path) {
    if (path.empty()) {
        out << j.dump(2) << '\n';
        return;
    }
    std::ofstream f(path);
    if (!f) throw DomainError("cannot write " + path);
    f << j.dump(2) << '\n';
}

inline StrategySpec parse_strategy(const std::string& s) {
    if (s == "optimal") return StrategySpec::optimal();
    if (s == "bond") return StrategySpec::bond_only();
    if (s == "asset") return StrategySpec::asset_only();
    if (s.rfind("fraction:", 0) == 0) {
        try {
            return StrategySpec::constant_fraction(std::stod(s.substr(9)));
        } catch (const std::invalid_argument&) {
        }
    }
    throw UsageError("--strategy must be optimal, bond, asset or fraction:<f>");
}

struct Options {
    // ratio
    double theta = 0, omega = 0, x = 0, tol = 1e-10;
    std::string method = "auto";
    // policy / value
    std::string config;
    double S = 0, X = 0, t = 0, T = 1;
    // simulate / misspec
    std::string model = "mcev", out, rates_out, start_date, end_date, strategy = "optimal", scheme = "euler";
    std::string true_cfg, assumed_cfg;
    int paths = 1000, steps = 252, threads = 0;
    std::uint64_t seed = 0;
    double S0 = 100, X0 = 100;
    std::optional<double> gamma;
    // calibrate / backtest
    std::string data, calib, cal_method = "ols", from, to, series_out, scaling = "model";
    int daycount = 252;
    bool all = false;
    std::optional<double> horizon;
    // bench
    std::string grid, methods;
    int reps = 10000, batch = 20;
};

inline int cmd_ratio(const Options& o, std::ostream& out) {
    RatioConfig cfg;
    cfg.tol = o.tol;
    cfg.max_terms = max_terms_from_env();
    cfg.max_depth = cfg.max_terms;
    const RatioParams p{o.theta, o.omega, o.x};
    RatioEvaluation r;
    if (o.method == "auto") r = ratio(p, cfg);
    else if (o.method == "small") r = ratio_small_x(p, cfg.tol, cfg.max_terms);
    else if (o.method == "large") r = ratio_large_x(p, cfg.tol, cfg.max_terms);
    else if (o.method == "cf") r = ratio_continued_fraction(p, cfg.tol, cfg.max_depth);
    else if (o.method == "direct") r = ratio_direct_quotient(p, cfg.tol, cfg.max_terms);
    else throw UsageError("--method must be auto, small, large, cf or direct");
    json j = to_json(r);
    j["theta"] = o.theta;
    j["omega"] = o.omega;
    j["x"] = o.x;
    emit(out, j, o.out);
    return kOk;
}

inline int cmd_policy(const Options& o, std::ostream& out, bool value_only) {
    const json cfg = load_json_file(o.config);
    const UtilityParams u = o.gamma ? UtilityParams(*o.gamma) : utility_from_json(cfg);
    const PolicyInput inp{o.X, o.S, o.t, o.T};
    inp.validate();
    json j;
    if (cfg.contains("kappa")) {
        const CIRParams c = cir_params_from_json(cfg);
        const PotentialScaling sc =
            cfg.contains("scaling") ? parse_scaling(cfg.at("scaling").get<std::string>()) : PotentialScaling::Model;
        const MCEVParams m = to_mcev(c, sc);
        j["model"] = "cir";
        j["f"] = value_multiplier(o.S, o.t, o.T, m, u);
        j["J"] = value_function(inp, m, u);
        if (!value_only) {
            j["pi"] = cir_optimal_position(inp, c, u, sc);
            j["feller"] = c.feller();
        }
        j["constants"] = to_json(cir_constants(c, u, sc));
    } else {
        const MCEVParams m = mcev_params_from_json(cfg);
        j["model"] = "mcev";
        j["f"] = value_multiplier(o.S, o.t, o.T, m, u);
        j["J"] = value_function(inp, m, u);
        if (!value_only) {
            const MCEVPolicy pol(m, u);
            j["pi"] = pol.position(inp);
            j["pi_whittaker"] = pol.position_whittaker(inp);
            j["tau"] = to_tau(o.t, o.T, m, pol.constants());
        }
        j["constants"] = to_json(derive_constants(m, u));
    }
    emit(out, j, o.out);
    return kOk;
}

inline int cmd_simulate(const Options& o, std::ostream& out) {
    const json cfg = load_json_file(o.config);
    SimConfig sc;
    sc.n_paths = o.paths;
    sc.n_steps = o.steps;
    sc.seed = o.seed;
    sc.n_threads = o.threads;
    sc.scheme = parse_scheme(o.scheme);
    double T = o.T;

    if (!o.rates_out.empty()) {
        // One square-root path written as a business-day rate series.
        if (o.model != "cir") throw UsageError("--rates-out requires --model cir");
        if (o.start_date.empty() || o.end_date.empty()) throw UsageError("--rates-out requires --start-date and --end-date");
        const auto days = business_days(date_or_throw(o.start_date, "--start-date"), date_or_throw(o.end_date, "--end-date"));
        if (days.size() < 2) throw UsageError("date range holds fewer than two business days");
        const double dt = daycount_dt(o.daycount);
        sc.n_paths = 1;
        sc.n_steps = static_cast<int>(days.size()) - 1;
        const CIRParams c = cir_params_from_json(cfg);
        const PathSet ps = simulate_cir(c, o.S0, dt * sc.n_steps, sc);
        RateSeries s;
        s.dt = dt;
        for (int k = 0; k <= sc.n_steps; ++k) {
            s.dates.push_back(days[static_cast<std::size_t>(k)]);
            s.rates.push_back(ps.at(0, k));
        }
        std::ofstream f(o.rates_out);
        if (!f) throw DomainError("cannot write " + o.rates_out);
        write_rates_csv(f, s);
        json j{{"rates_out", o.rates_out}, {"n_obs", s.size()}, {"seed", o.seed}};
        emit(out, j, "");
        return kOk;
    }

    if (o.out.empty()) throw UsageError("simulate requires --out <dir>");
    std::filesystem::create_directories(o.out);
    const UtilityParams u = o.gamma ? UtilityParams(*o.gamma) : utility_from_json(cfg);
    PathSet ps;
    std::optional<MCEVParams> m;
    if (o.model == "cir") {
        const CIRParams c = cir_params_from_json(cfg);
        ps = simulate_cir(c, o.S0, T, sc);
        m = to_mcev(c);
    } else if (o.model == "mcev") {
        m = mcev_params_from_json(cfg);
        ps = simulate_mcev(*m, o.S0, T, sc);
    } else {
        throw UsageError("--model must be mcev or cir");
    }
    const auto wealth = run_strategy(ps, parse_strategy(o.strategy), *m, u, o.X0, T, o.threads);
    {
        std::ofstream f(std::filesystem::path(o.out) / "paths.csv");
        if (!f) throw DomainError("cannot write " + o.out + "/paths.csv");
        write_paths_csv(f, ps, wealth);
    }
    int absorbed = 0;
    for (char a : ps.absorbed) absorbed += a ? 1 : 0;
    json j = to_json(terminal_stats(wealth, u));
    j["absorbed_paths"] = absorbed;
    j["warnings"] = ps.warnings;
    j["seed"] = o.seed;
    emit(out, j, (std::filesystem::path(o.out) / "stats.json").string());
    emit(out, j, "");
    return kOk;
}

inline int cmd_misspec(const Options& o, std::ostream& out) {
    const json tj = load_json_file(o.true_cfg);
    const json aj = load_json_file(o.assumed_cfg);
    const UtilityParams u = o.gamma ? UtilityParams(*o.gamma) : utility_from_json(tj);
    SimConfig sc;
    sc.n_paths = o.paths;
    sc.n_steps = o.steps;
    sc.seed = o.seed;
    sc.n_threads = o.threads;
    sc.scheme = parse_scheme(o.scheme);
    const MisspecResult r =
        misspecification_study(mcev_params_from_json(tj), mcev_params_from_json(aj), u, o.S0, o.X0, o.T, sc);
    const json j{{"assumed", to_json(r.assumed)},
                 {"true", to_json(r.truth)},
                 {"utility_loss", r.utility_loss},
                 {"utility_loss_stderr", r.utility_loss_stderr},
                 {"seed", o.seed}};
    emit(out, j, o.out);
    return kOk;
}

inline RateSeries window(const RateSeries& s, const Options& o, const char* dfrom, const char* dto) {
    if (o.all) return s;
    const RateSeries w = s.slice(date_or_throw(o.from.empty() ? dfrom : o.from, "--from"),
                                 date_or_throw(o.to.empty() ? dto : o.to, "--to"));
    if (w.size() == 0) throw DomainError("no observations inside the selected date window");
    return w;
}

inline int cmd_calibrate(const Options& o, std::ostream& out, std::ostream& err) {
    const RateSeries s = load_csv(o.data, daycount_dt(o.daycount));
    for (const auto& w : s.warnings) err << "warning: " << w << '\n';
    const CIRCalibration c = calibrate_cir(window(s, o, "2011-01-01", "2016-07-01"), parse_calibration_method(o.cal_method));
    emit(out, to_json(c), o.out);
    return kOk;
}

inline int cmd_backtest(const Options& o, std::ostream& out, std::ostream& err) {
    const RateSeries s = load_csv(o.data, daycount_dt(o.daycount));
    for (const auto& w : s.warnings) err << "warning: " << w << '\n';
    const CIRCalibration c = calibration_from_json(load_json_file(o.calib));
    const UtilityParams u(o.gamma.value_or(-7.0));
    const BacktestReport r =
        run_backtest(window(s, o, "2016-07-01", "2017-06-26"), c, u, o.X0, o.horizon, parse_scaling(o.scaling));
    if (r.bankrupt) err << "warning: wealth reached zero; backtest truncated\n";
    if (!o.series_out.empty()) {
        std::ofstream f(o.series_out);
        if (!f) throw DomainError("cannot write " + o.series_out);
        write_backtest_csv(f, r);
    }
    emit(out, to_json(r), o.out);
    return kOk;
}

inline int cmd_bench(const Options& o, std::ostream& out) {
    BenchConfig cfg;
    cfg.reps = o.reps;
    cfg.batch = o.batch;
    cfg.tol = o.tol;
    if (!o.methods.empty()) {
        cfg.methods.clear();
        std::stringstream ss(o.methods);
        std::string m;
        while (std::getline(ss, m, ',')) cfg.methods.push_back(parse_bench_method(m));
    }
    std::vector<RatioParams> points;
    const OracleTable oracle = load_grid_csv(o.grid, &points);
    const BenchReport rep = run_bench(cfg, points, oracle);
    if (o.out.empty()) {
        write_bench_csv(out, rep);
    } else {
        std::ofstream f(o.out);
        if (!f) throw DomainError("cannot write " + o.out);
        write_bench_csv(f, rep);
    }
    return kOk;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Closed-form optimal investment under the modified CEV model", "mcev"};
    app.require_subcommand(1, 1);
    Options o;

    auto* ratio_cmd = app.add_subcommand("ratio", "Kummer ratio M(theta-1,omega,x)/M(theta,omega,x)");
    ratio_cmd->add_option("--theta", o.theta)->required();
    ratio_cmd->add_option("--omega", o.omega)->required();
    ratio_cmd->add_option("--x", o.x)->required();
    ratio_cmd->add_option("--tol", o.tol);
    ratio_cmd->add_option("--method", o.method, "auto, small, large, cf or direct")
        ->check(CLI::IsMember({"auto", "small", "large", "cf", "direct"}));
    ratio_cmd->add_option("--out", o.out, "write JSON here instead of stdout");

    auto add_policy_flags = [&](CLI::App* c) {
        c->add_option("--config", o.config, "model JSON")->required();
        c->add_option("--S", o.S)->required();
        c->add_option("--X", o.X)->required();
        c->add_option("--t", o.t);
        c->add_option("--T", o.T);
        c->add_option("--gamma", o.gamma);
        c->add_option("--out", o.out);
    };
    auto* policy_cmd = app.add_subcommand("policy", "Optimal position and value multiplier");
    add_policy_flags(policy_cmd);
    auto* value_cmd = app.add_subcommand("value", "Value multiplier f and value function J");
    add_policy_flags(value_cmd);

    auto add_sim_flags = [&](CLI::App* c) {
        c->add_option("--paths", o.paths);
        c->add_option("--steps", o.steps);
        c->add_option("--seed", o.seed);
        c->add_option("--threads", o.threads, "0 uses every hardware thread");
        c->add_option("--scheme", o.scheme, "euler or milstein")->check(CLI::IsMember({"euler", "milstein"}));
        c->add_option("--S0", o.S0);
        c->add_option("--X0", o.X0);
        c->add_option("--T", o.T);
        c->add_option("--gamma", o.gamma);
    };
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate price paths and a strategy's wealth");
    sim_cmd->add_option("--config", o.config)->required();
    sim_cmd->add_option("--model", o.model, "mcev or cir")->check(CLI::IsMember({"mcev", "cir"}));
    sim_cmd->add_option("--strategy", o.strategy, "optimal, bond, asset or fraction:<f>");
    sim_cmd->add_option("--out", o.out, "output directory");
    sim_cmd->add_option("--rates-out", o.rates_out, "write one square-root path as date,rate CSV");
    sim_cmd->add_option("--start-date", o.start_date);
    sim_cmd->add_option("--end-date", o.end_date);
    sim_cmd->add_option("--daycount", o.daycount);
    add_sim_flags(sim_cmd);

    auto* mis_cmd = app.add_subcommand("misspec", "Trade with assumed parameters on paths from the true ones");
    mis_cmd->add_option("--true", o.true_cfg)->required();
    mis_cmd->add_option("--assumed", o.assumed_cfg)->required();
    mis_cmd->add_option("--out", o.out);
    add_sim_flags(mis_cmd);

    auto add_window = [&](CLI::App* c) {
        c->add_option("--data", o.data, "date,rate CSV")->required();
        c->add_option("--daycount", o.daycount, "252 or 365");
        c->add_option("--from", o.from);
        c->add_option("--to", o.to);
        c->add_flag("--all", o.all, "use the whole series");
        c->add_option("--out", o.out);
    };
    auto* cal_cmd = app.add_subcommand("calibrate", "Fit the square-root process to a rate series");
    add_window(cal_cmd);
    cal_cmd->add_option("--method", o.cal_method, "ols or mle")->check(CLI::IsMember({"ols", "mle"}));

    auto* bt_cmd = app.add_subcommand("backtest", "Trade the closed-form square-root policy on a rate series");
    add_window(bt_cmd);
    bt_cmd->add_option("--calib", o.calib, "calibration JSON")->required();
    bt_cmd->add_option("--gamma", o.gamma);
    bt_cmd->add_option("--x0", o.X0);
    bt_cmd->add_option("--T", o.horizon);
    bt_cmd->add_option("--scaling", o.scaling, "model or unscaled")->check(CLI::IsMember({"model", "unscaled"}));
    bt_cmd->add_option("--series-out", o.series_out, "wealth/position CSV");

    auto* bench_cmd = app.add_subcommand("bench", "Time the ratio methods against an oracle grid");
    bench_cmd->add_option("--grid", o.grid, "theta,omega,x[,value] CSV")->required();
    bench_cmd->add_option("--reps", o.reps);
    bench_cmd->add_option("--batch", o.batch);
    bench_cmd->add_option("--tol", o.tol);
    bench_cmd->add_option("--methods", o.methods, "comma-separated method names");
    bench_cmd->add_option("--out", o.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (ratio_cmd->parsed()) return cmd_ratio(o, out);
        if (policy_cmd->parsed()) return cmd_policy(o, out, false);
        if (value_cmd->parsed()) return cmd_policy(o, out, true);
        if (sim_cmd->parsed()) return cmd_simulate(o, out);
        if (mis_cmd->parsed()) return cmd_misspec(o, out);
        if (cal_cmd->parsed()) return cmd_calibrate(o, out, err);
        if (bt_cmd->parsed()) return cmd_backtest(o, out, err);
        if (bench_cmd->parsed()) return cmd_bench(o, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDomain;
    }
    return kUsage;
}

}  // namespace mcev::cli
