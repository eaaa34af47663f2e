#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mcev_cli.hpp"

using namespace mcev;
using nlohmann::json;

namespace {

struct CliRun {
    int code;
    std::string out, err;
    json j() const { return json::parse(out); }
};

CliRun run(std::vector<std::string> args) {
    args.insert(args.begin(), "mcev");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string cfg(const std::string& name) { return std::string(MCEV_CONFIG_DIR) + "/" + name; }
std::string dat(const std::string& name) { return std::string(MCEV_DATA_DIR) + "/" + name; }

std::filesystem::path scratch() {
    auto p = std::filesystem::temp_directory_path() / "mcev_cli_test";
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST(Cli, RatioAtZero) {
    const CliRun r = run({"ratio", "--theta", "2", "--omega", "3", "--x", "0"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.j().at("value").get<double>(), 1.0);
}

TEST(Cli, RatioMatchesLibraryBitForBit) {
    const CliRun r = run({"ratio", "--theta", "1.42", "--omega", "5.24", "--x", "800"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.j().at("value").get<double>(), ratio({1.42, 5.24, 800.0}).value);
    EXPECT_EQ(r.j().at("method").get<std::string>(), to_string(ratio({1.42, 5.24, 800.0}).method));
}

TEST(Cli, RatioMethodsAndDomainError) {
    for (const char* m : {"small", "cf", "direct"})
        EXPECT_EQ(run({"ratio", "--theta", "1.2", "--omega", "2.2", "--x", "5", "--method", m}).code, 0) << m;
    EXPECT_EQ(run({"ratio", "--theta", "1.2", "--omega", "2.2", "--x", "60", "--method", "large"}).code, 0);
    // the asymptotic series cannot reach the tolerance this close to the origin
    EXPECT_EQ(run({"ratio", "--theta", "1.2", "--omega", "2.2", "--x", "5", "--method", "large"}).code, 1);
    EXPECT_EQ(run({"ratio", "--theta", "1", "--omega", "-2", "--x", "1"}).code, 1);
    EXPECT_EQ(run({"ratio", "--theta", "1", "--omega", "2", "--x", "-1"}).code, 1);
    EXPECT_EQ(run({"ratio", "--theta", "1", "--omega", "2", "--x", "1", "--method", "gsl"}).code, 2);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({"ratio", "--theta", "2", "--omega", "3", "--x", "0", "--bogus", "1"}).code, 2);
    EXPECT_EQ(run({"ratio", "--theta", "2"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, MaxTermsFromEnvironment) {
    setenv("MCEV_MAX_TERMS", "3", 1);
    const CliRun r = run({"ratio", "--theta", "1.2", "--omega", "2.2", "--x", "20", "--method", "small"});
    unsetenv("MCEV_MAX_TERMS");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST(Cli, PolicyAtHorizon) {
    const CliRun r = run({"policy", "--config", cfg("mcev_base.json"), "--S", "100", "--X", "100", "--t", "1", "--T", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.j().at("f").get<double>(), 1.0);
}

TEST(Cli, PolicyMatchesLibrary) {
    const CliRun r = run({"policy", "--config", cfg("mcev_base.json"), "--S", "100", "--X", "100"});
    ASSERT_EQ(r.code, 0) << r.err;
    const MCEVParams m(0.4, -0.4, 0.8, 0.045, 0.04);
    const UtilityParams u(-4);
    const PolicyInput inp{100, 100, 0, 1};
    EXPECT_EQ(r.j().at("pi").get<double>(), MCEVPolicy(m, u).position(inp));
    EXPECT_EQ(r.j().at("f").get<double>(), value_multiplier(100, 0, 1, m, u));
    EXPECT_EQ(r.j().at("J").get<double>(), value_function(inp, m, u));
    EXPECT_EQ(r.j().at("constants").at("eta").get<double>(), derive_constants(m, u).eta);
}

TEST(Cli, PolicyCirAndGammaOverride) {
    const CliRun r = run({"policy", "--config", cfg("cir_usdcad.json"), "--S", "1.30", "--X", "1000", "--T", "0.9961"});
    ASSERT_EQ(r.code, 0) << r.err;
    const CIRParams c(0.1090, 1.32675, 0.28789);
    EXPECT_EQ(r.j().at("pi").get<double>(), cir_optimal_position({1000, 1.30, 0, 0.9961}, c, UtilityParams(-7)));
    const CliRun g = run({"policy", "--config", cfg("cir_usdcad.json"), "--S", "1.30", "--X", "1000", "--gamma", "-2"});
    ASSERT_EQ(g.code, 0) << g.err;
    EXPECT_EQ(g.j().at("pi").get<double>(), cir_optimal_position({1000, 1.30, 0, 1}, c, UtilityParams(-2)));
}

TEST(Cli, ValueAndPolicyDomainErrors) {
    EXPECT_EQ(run({"value", "--config", cfg("mcev_base.json"), "--S", "-1", "--X", "100"}).code, 1);
    EXPECT_EQ(run({"policy", "--config", cfg("mcev_base.json"), "--S", "100", "--X", "100", "--t", "2"}).code, 1);
    EXPECT_EQ(run({"policy", "--config", "/nonexistent.json", "--S", "100", "--X", "100"}).code, 1);
    const CliRun v = run({"value", "--config", cfg("mcev_base.json"), "--S", "100", "--X", "100"});
    ASSERT_EQ(v.code, 0);
    EXPECT_FALSE(v.j().contains("pi"));
}

TEST(Cli, SimulateWritesPathsAndStats) {
    const auto dir = scratch() / "sim";
    std::filesystem::remove_all(dir);
    const CliRun r = run({"simulate", "--config", cfg("mcev_base.json"), "--paths", "200", "--steps", "20", "--seed", "7",
                       "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(std::filesystem::exists(dir / "paths.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "stats.json"));
    EXPECT_EQ(r.j().at("n_used").get<int>() + r.j().at("n_excluded").get<int>(), 200);
    const CliRun again = run({"simulate", "--config", cfg("mcev_base.json"), "--paths", "200", "--steps", "20", "--seed",
                           "7", "--threads", "3", "--out", dir.string()});
    EXPECT_EQ(again.out, r.out);
    EXPECT_EQ(run({"simulate", "--config", cfg("mcev_base.json"), "--scheme", "rk4", "--out", dir.string()}).code, 2);
    EXPECT_EQ(run({"simulate", "--config", cfg("mcev_base.json")}).code, 2);
}

TEST(Cli, RatesOutRoundTrips) {
    const auto f = scratch() / "rates.csv";
    const CliRun r = run({"simulate", "--model", "cir", "--config", cfg("cir_usdcad.json"), "--rates-out", f.string(),
                       "--start-date", "2020-01-06", "--end-date", "2020-01-17", "--seed", "3", "--S0", "1.3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const RateSeries s = load_csv(f.string());
    EXPECT_EQ(s.size(), 10u);
    EXPECT_EQ(s.rates.front(), 1.3);
    EXPECT_EQ(run({"simulate", "--config", cfg("cir_usdcad.json"), "--rates-out", f.string()}).code, 2);
}

TEST(Cli, Misspecification) {
    const CliRun r = run({"misspec", "--true", cfg("mcev_base.json"), "--assumed", cfg("mcev_alpha_high.json"),
                       "--paths", "500", "--steps", "20", "--seed", "11"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.j().contains("utility_loss"));
    EXPECT_GE(r.j().at("utility_loss_stderr").get<double>(), 0.0);
}

TEST(Cli, CalibrateAndBacktestFixture) {
    const auto cal = scratch() / "cal.json";
    const CliRun c = run({"calibrate", "--data", dat("cir_fixture.csv"), "--out", cal.string()});
    ASSERT_EQ(c.code, 0) << c.err;
    const RateSeries s = load_csv(dat("cir_fixture.csv"));
    const CIRCalibration lib = calibrate_cir(s.slice(*parse_date("2011-01-01"), *parse_date("2016-07-01")));
    std::ifstream in(cal);
    const json cj = json::parse(in);
    EXPECT_EQ(cj.at("kappa").get<double>(), lib.kappa);
    EXPECT_EQ(cj.at("s_bar").get<double>(), lib.s_bar);
    EXPECT_EQ(cj.at("a").get<double>(), lib.a);

    const auto series = scratch() / "bt.csv";
    const CliRun b = run({"backtest", "--data", dat("cir_fixture.csv"), "--calib", cal.string(), "--x0", "1000",
                       "--series-out", series.string()});
    ASSERT_EQ(b.code, 0) << b.err;
    const RateSeries w = s.slice(*parse_date("2016-07-01"), *parse_date("2017-06-26"));
    EXPECT_NEAR(b.j().at("benchmark_return").get<double>(), w.rates.back() / w.rates.front() - 1.0, 1e-15);
    EXPECT_EQ(b.j().at("total_return").get<double>(), run_backtest(w, lib, UtilityParams(-7), 1000).total_return);
    EXPECT_TRUE(std::filesystem::exists(series));
}

TEST(Cli, CalibrateRejectsBadInput) {
    EXPECT_EQ(run({"calibrate", "--data", "/nonexistent.csv"}).code, 1);
    EXPECT_EQ(run({"calibrate", "--data", dat("cir_fixture.csv"), "--from", "2011/01/01"}).code, 2);
    EXPECT_EQ(run({"calibrate", "--data", dat("cir_fixture.csv"), "--from", "2030-01-01", "--to", "2031-01-01"}).code,
              1);
    EXPECT_EQ(run({"calibrate", "--data", dat("cir_fixture.csv"), "--method", "gmm"}).code, 2);
}

TEST(Cli, BenchWritesCsv) {
    const auto grid = scratch() / "grid.csv";
    {
        std::ofstream f(grid);
        f << "theta,omega,x\n1.2,2.2,0.5\n1.42,5.24,800\n";
    }
    const CliRun r = run({"bench", "--grid", grid.string(), "--reps", "20", "--methods", "dispatcher,naive_direct"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("method,theta,omega,x,median_ns,p90_ns,rel_err,failures\n", 0), 0u);
    EXPECT_NE(r.out.find("naive_direct,1.42,5.24,800,"), std::string::npos);
    EXPECT_EQ(run({"bench", "--grid", grid.string(), "--methods", "gsl"}).code, 1);
}
