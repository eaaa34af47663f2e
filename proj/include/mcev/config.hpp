#pragma once

// JSON documents for parameters and reports (nlohmann/json).

#include <fstream>
#include <string>

#include <json.hpp>

#include "mcev/backtest.hpp"
#include "mcev/errors.hpp"
#include "mcev/model.hpp"
#include "mcev/montecarlo.hpp"
#include "mcev/policy.hpp"
#include "mcev/specialfn.hpp"

namespace mcev {

using json = nlohmann::json;

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DomainError(path + ": invalid JSON: " + e.what());
    }
}

namespace detail {

inline double number(const json& j, const char* key) {
    if (!j.contains(key)) throw DomainError(std::string("config: missing key '") + key + "'");
    const json& v = j.at(key);
    if (!v.is_number()) throw DomainError(std::string("config: key '") + key + "' must be a number");
    return v.get<double>();
}

}  // namespace detail

/// {"a", "beta", "c", "alpha", "r"[, "scaling": "model" | "unscaled"]}
inline MCEVParams mcev_params_from_json(const json& j) {
    const PotentialScaling sc =
        j.contains("scaling") ? parse_scaling(j.at("scaling").get<std::string>()) : PotentialScaling::Model;
    return MCEVParams(detail::number(j, "a"), detail::number(j, "beta"), detail::number(j, "c"),
                      detail::number(j, "alpha"), detail::number(j, "r"), sc);
}

inline UtilityParams utility_from_json(const json& j) { return UtilityParams(detail::number(j, "gamma")); }

/// {"kappa", "s_bar", "a"}
inline CIRParams cir_params_from_json(const json& j) {
    return CIRParams(detail::number(j, "kappa"), detail::number(j, "s_bar"), detail::number(j, "a"));
}

inline json to_json(const MCEVParams& m) {
    return {{"a", m.a}, {"beta", m.beta}, {"c", m.c}, {"alpha", m.alpha}, {"r", m.r},
            {"scaling", std::string(to_string(m.scaling))}};
}

inline json to_json(const DerivedConstants& d) {
    return {{"delta", d.delta}, {"Lambda", d.Lambda}, {"lambda", d.lambda}, {"eta", d.eta},
            {"Q", d.Q},         {"R", d.R},           {"theta", d.theta},   {"omega", d.omega}};
}

inline json to_json(const RatioEvaluation& r) {
    return {{"value", r.value},
            {"method", std::string(to_string(r.method))},
            {"terms_used", r.terms_used},
            {"est_error", r.est_error}};
}

inline json to_json(const TerminalStats& s) {
    json q = json::object();
    for (const auto& [level, v] : s.quantiles) {
        char key[16];
        std::snprintf(key, sizeof key, "q%02d", static_cast<int>(std::lround(level * 100)));
        q[key] = v;
    }
    return {{"mean", s.mean},
            {"std", s.std},
            {"quantiles", q},
            {"certainty_equivalent", s.certainty_equivalent},
            {"mean_utility", s.mean_utility},
            {"utility_stderr", s.utility_stderr},
            {"n_used", s.n_used},
            {"n_excluded", s.n_excluded}};
}

inline json to_json(const CIRCalibration& c) {
    return {{"kappa", c.kappa},
            {"s_bar", c.s_bar},
            {"a", c.a},
            {"method", to_string(c.method)},
            {"stderr", {{"kappa", c.std_error.kappa}, {"s_bar", c.std_error.s_bar}, {"a", c.std_error.a}}},
            {"n_obs", c.n_obs},
            {"dt", c.dt},
            {"feller", 2.0 * c.kappa * c.s_bar > c.a * c.a}};
}

inline CIRCalibration calibration_from_json(const json& j) {
    CIRCalibration c;
    c.kappa = detail::number(j, "kappa");
    c.s_bar = detail::number(j, "s_bar");
    c.a = detail::number(j, "a");
    if (j.contains("method")) c.method = parse_calibration_method(j.at("method").get<std::string>());
    if (j.contains("stderr")) {
        const json& se = j.at("stderr");
        c.std_error.kappa = se.value("kappa", 0.0);
        c.std_error.s_bar = se.value("s_bar", 0.0);
        c.std_error.a = se.value("a", 0.0);
    }
    c.n_obs = j.value("n_obs", 0);
    c.dt = j.value("dt", 1.0 / 252.0);
    (void)c.params();  // validates
    return c;
}

inline json to_json(const BacktestReport& r) {
    return {{"total_return", r.total_return},
            {"max_drawdown", r.max_drawdown},
            {"benchmark_return", r.benchmark_return},
            {"benchmark_drawdown", r.benchmark_drawdown},
            {"n_days", r.n_days},
            {"bankrupt", r.bankrupt},
            {"T", r.T},
            {"params", to_json(r.calibration)}};
}

inline void write_backtest_csv(std::ostream& os, const BacktestReport& r) {
    os.precision(17);
    os << "date,wealth,position,benchmark_wealth\n";
    for (std::size_t k = 0; k < r.wealth.size(); ++k) {
        os << format_date(r.dates[k]) << ',' << r.wealth[k] << ',';
        if (k < r.positions.size()) os << r.positions[k];
        os << ',' << r.benchmark_wealth[k] << '\n';
    }
}

}  // namespace mcev
