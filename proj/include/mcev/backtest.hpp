#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mcev/errors.hpp"
#include "mcev/model.hpp"
#include "mcev/policy.hpp"

namespace mcev {

using Date = std::chrono::year_month_day;

/// Strict YYYY-MM-DD.
inline std::optional<Date> parse_date(const std::string& s) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    if (std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) return std::nullopt;
    const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) return std::nullopt;
    return date;
}

inline std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

struct RateSeries {
    std::vector<Date> dates;
    std::vector<double> rates;
    double dt = 1.0 / 252.0;
    std::vector<std::string> warnings;

    std::size_t size() const { return rates.size(); }

    /// Observations with from <= date <= to.
    RateSeries slice(const Date& from, const Date& to) const {
        RateSeries out;
        out.dt = dt;
        for (std::size_t i = 0; i < dates.size(); ++i) {
            if (dates[i] >= from && dates[i] <= to) {
                out.dates.push_back(dates[i]);
                out.rates.push_back(rates[i]);
            }
        }
        return out;
    }
};

inline double daycount_dt(int daycount) {
    if (daycount != 252 && daycount != 365) throw DomainError("daycount must be 252 or 365");
    return 1.0 / daycount;
}

/// Parses "date,rate" text.  Rows are sorted by date (with a warning when the
/// input was not); malformed rows, non-positive rates and repeated dates are
/// rejected with their line number.
inline RateSeries parse_rates(std::istream& in, double dt = 1.0 / 252.0, const std::string& source = "input") {
    if (!(dt > 0.0)) throw DomainError("dt must be > 0");
    std::string line;
    int lineno = 0;
    auto where = [&] { return source + ":" + std::to_string(lineno) + ": "; };
    if (!std::getline(in, line)) throw DomainError(source + ": empty file");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "date,rate") throw DomainError(where() + "expected header 'date,rate'");

    struct Row {
        Date date;
        double rate;
        int line;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DomainError(where() + "malformed row '" + line + "'");
        const auto date = parse_date(line.substr(0, comma));
        if (!date) throw DomainError(where() + "bad ISO-8601 date '" + line.substr(0, comma) + "'");
        const std::string field = line.substr(comma + 1);
        double rate = 0.0;
        std::size_t used = 0;
        try {
            rate = std::stod(field, &used);
        } catch (const std::exception&) {
            throw DomainError(where() + "bad rate '" + field + "'");
        }
        if (used != field.size() || !std::isfinite(rate)) throw DomainError(where() + "bad rate '" + field + "'");
        if (!(rate > 0.0)) throw DomainError(where() + "rate must be positive, got " + field);
        rows.push_back({*date, rate, lineno});
    }

    RateSeries s;
    s.dt = dt;
    const bool sorted = std::is_sorted(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });
    if (!sorted) {
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });
        s.warnings.push_back(source + ": rows were not in date order and have been sorted");
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].date == rows[i - 1].date) {
            const int ln = std::max(rows[i].line, rows[i - 1].line);
            throw DomainError(source + ":" + std::to_string(ln) + ": duplicated date " + format_date(rows[i].date));
        }
    }
    for (const auto& r : rows) {
        s.dates.push_back(r.date);
        s.rates.push_back(r.rate);
    }
    return s;
}

inline RateSeries load_csv(const std::string& path, double dt = 1.0 / 252.0) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open " + path);
    return parse_rates(in, dt, path);
}

inline void write_rates_csv(std::ostream& os, const RateSeries& s) {
    os.precision(17);
    os << "date,rate\n";
    for (std::size_t i = 0; i < s.size(); ++i) os << format_date(s.dates[i]) << ',' << s.rates[i] << '\n';
}

enum class CalibrationMethod { OLSEuler, MLE };

inline std::string to_string(CalibrationMethod m) { return m == CalibrationMethod::OLSEuler ? "ols" : "mle"; }

inline CalibrationMethod parse_calibration_method(const std::string& s) {
    if (s == "ols") return CalibrationMethod::OLSEuler;
    if (s == "mle") return CalibrationMethod::MLE;
    throw DomainError("unknown calibration method '" + s + "' (expected ols or mle)");
}

struct CIRCalibration {
    double kappa = 0.0;
    double s_bar = 0.0;
    double a = 0.0;
    CalibrationMethod method = CalibrationMethod::OLSEuler;
    struct StdErrors {
        double kappa = 0.0;
        double s_bar = 0.0;
        double a = 0.0;
    } std_error;
    int n_obs = 0;
    double dt = 1.0 / 252.0;

    CIRParams params() const { return CIRParams(kappa, s_bar, a); }
};

namespace detail {

struct Ols2 {
    double b1, b2;           // coefficients
    double v11, v12, v22;    // (X'WX)^{-1}
    double rss;              // weighted residual sum of squares
};

// Weighted regression y = b1 x1 + b2 x2 without intercept.
inline Ols2 ols2(const std::vector<double>& x1, const std::vector<double>& x2, const std::vector<double>& y,
                 const std::vector<double>& w) {
    double s11 = 0, s12 = 0, s22 = 0, t1 = 0, t2 = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        s11 += w[i] * x1[i] * x1[i];
        s12 += w[i] * x1[i] * x2[i];
        s22 += w[i] * x2[i] * x2[i];
        t1 += w[i] * x1[i] * y[i];
        t2 += w[i] * x2[i] * y[i];
    }
    const double det = s11 * s22 - s12 * s12;
    if (!(std::abs(det) > 1e-12 * s11 * s22)) throw DomainError("calibration: degenerate regression (collinear design)");
    Ols2 r{};
    r.v11 = s22 / det;
    r.v12 = -s12 / det;
    r.v22 = s11 / det;
    r.b1 = r.v11 * t1 + r.v12 * t2;
    r.b2 = r.v12 * t1 + r.v22 * t2;
    r.rss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - r.b1 * x1[i] - r.b2 * x2[i];
        r.rss += w[i] * e * e;
    }
    return r;
}

inline CIRCalibration calibrate_ols(const RateSeries& s) {
    const std::size_t n = s.size() - 1;
    const double dt = s.dt;
    std::vector<double> x1(n), x2(n), y(n), w(n, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double r = std::sqrt(s.rates[k]);
        y[k] = (s.rates[k + 1] - s.rates[k]) / r;
        x1[k] = dt / r;
        x2[k] = dt * r;
    }
    const Ols2 f = ols2(x1, x2, y, w);
    const double sigma2 = f.rss / static_cast<double>(n - 2);
    if (!(sigma2 > 0.0)) throw DomainError("calibration: zero residual variance (degenerate regression)");
    const double kappa = -f.b2;
    if (!(kappa > 0.0)) {
        throw DomainError("calibration: implied kappa = " + std::to_string(kappa) + " <= 0 (series is not mean-reverting)");
    }
    CIRCalibration c;
    c.method = CalibrationMethod::OLSEuler;
    c.kappa = kappa;
    c.s_bar = f.b1 / kappa;
    c.a = std::sqrt(sigma2 / dt);
    c.n_obs = static_cast<int>(s.size());
    c.dt = dt;
    // delta method on s_bar = -b1 / b2
    const double g1 = -1.0 / f.b2, g2 = f.b1 / (f.b2 * f.b2);
    c.std_error.kappa = std::sqrt(sigma2 * f.v22);
    c.std_error.s_bar = std::sqrt(sigma2 * (g1 * g1 * f.v11 + 2.0 * g1 * g2 * f.v12 + g2 * g2 * f.v22));
    c.std_error.a = c.a / std::sqrt(2.0 * static_cast<double>(n - 2));
    return c;
}

// Gaussian quasi-likelihood with the exact conditional mean and variance of the
// square-root process, solved by iteratively reweighted least squares.
inline CIRCalibration calibrate_mle(const RateSeries& s) {
    CIRCalibration c = calibrate_ols(s);
    const std::size_t n = s.size() - 1;
    const double dt = s.dt;
    std::vector<double> x1(n), x2(n), y(n), w(n);
    for (std::size_t k = 0; k < n; ++k) {
        x1[k] = 1.0;
        x2[k] = s.rates[k];
        y[k] = s.rates[k + 1];
    }
    double kappa = c.kappa, s_bar = c.s_bar, a2 = c.a * c.a;
    Ols2 f{};
    for (int it = 0; it < 50; ++it) {
        const double e = std::exp(-kappa * dt);
        const double v1 = (e - e * e) / kappa;
        const double v0 = s_bar * (1.0 - e) * (1.0 - e) / (2.0 * kappa);
        for (std::size_t k = 0; k < n; ++k) w[k] = 1.0 / (v1 * s.rates[k] + v0);
        f = ols2(x1, x2, y, w);
        if (!(f.b2 > 0.0 && f.b2 < 1.0)) {
            throw DomainError("calibration: implied persistence " + std::to_string(f.b2) +
                              " outside (0, 1) (series is not mean-reverting)");
        }
        const double k_new = -std::log(f.b2) / dt;
        const double s_new = f.b1 / (1.0 - f.b2);
        const double a2_new = f.rss / static_cast<double>(n - 2);  // variance shape carries a^2 = 1
        const bool done = std::abs(k_new - kappa) <= 1e-12 * kappa && std::abs(s_new - s_bar) <= 1e-12 * s_bar;
        kappa = k_new;
        s_bar = s_new;
        a2 = a2_new;
        if (done) break;
    }
    if (!(s_bar > 0.0)) throw DomainError("calibration: implied long-term mean is not positive");
    c.method = CalibrationMethod::MLE;
    c.kappa = kappa;
    c.s_bar = s_bar;
    c.a = std::sqrt(a2);
    const double sig2 = a2;
    const double b2 = f.b2;
    c.std_error.kappa = std::sqrt(sig2 * f.v22) / (b2 * dt);
    // s_bar = b1 / (1 - b2)
    const double g1 = 1.0 / (1.0 - b2), g2 = f.b1 / ((1.0 - b2) * (1.0 - b2));
    c.std_error.s_bar = std::sqrt(sig2 * (g1 * g1 * f.v11 + 2.0 * g1 * g2 * f.v12 + g2 * g2 * f.v22));
    c.std_error.a = c.a / std::sqrt(2.0 * static_cast<double>(n - 2));
    return c;
}

}  // namespace detail

inline CIRCalibration calibrate_cir(const RateSeries& s, CalibrationMethod method = CalibrationMethod::OLSEuler) {
    if (s.size() < 100) throw DomainError("calibration needs at least 100 observations, got " + std::to_string(s.size()));
    for (double r : s.rates) {
        if (!(r > 0.0)) throw DomainError("calibration requires strictly positive rates");
    }
    return method == CalibrationMethod::OLSEuler ? detail::calibrate_ols(s) : detail::calibrate_mle(s);
}

/// min_k (W_k - max_{j<=k} W_j) / max_{j<=k} W_j
inline double max_drawdown(const std::vector<double>& wealth) {
    if (wealth.empty()) throw DomainError("max_drawdown of an empty series");
    double peak = wealth.front(), worst = 0.0;
    for (double w : wealth) {
        peak = std::max(peak, w);
        worst = std::min(worst, (w - peak) / peak);
    }
    return worst;
}

struct BacktestReport {
    double total_return = 0.0;
    double max_drawdown = 0.0;
    double benchmark_return = 0.0;
    double benchmark_drawdown = 0.0;
    std::vector<Date> dates;
    std::vector<double> wealth;
    std::vector<double> positions;
    std::vector<double> benchmark_wealth;
    int n_days = 0;
    bool bankrupt = false;
    double T = 0.0;
    CIRCalibration calibration;
};

/// Daily rebalancing X_{k+1} = X_k + pi_k (S_{k+1} - S_k) with pi_k from the
/// square-root closed form; the benchmark holds X0/S0 units throughout.
/// T defaults to (n - 1) dt, the span of the series.
inline BacktestReport run_backtest(const RateSeries& s, const CIRCalibration& c, const UtilityParams& u, double X0,
                                   std::optional<double> T = std::nullopt,
                                   PotentialScaling scaling = PotentialScaling::Model) {
    if (s.size() < 2) throw DomainError("backtest needs at least two observations");
    if (!(X0 > 0.0)) throw DomainError("backtest requires X0 > 0");
    const CIRParams p = c.params();
    const double horizon = T.value_or(static_cast<double>(s.size() - 1) * s.dt);
    if (!(horizon > 0.0)) throw DomainError("backtest requires T > 0");

    BacktestReport rep;
    rep.calibration = c;
    rep.T = horizon;
    const double S0 = s.rates.front();
    double X = X0;
    rep.dates.push_back(s.dates.front());
    rep.wealth.push_back(X);
    rep.benchmark_wealth.push_back(X0);
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
        const double t = std::min(static_cast<double>(k) * s.dt, horizon);
        const double pi = cir_optimal_position({X, s.rates[k], t, horizon}, p, u, scaling);
        rep.positions.push_back(pi);
        X = X + pi * (s.rates[k + 1] - s.rates[k]);
        rep.dates.push_back(s.dates[k + 1]);
        rep.benchmark_wealth.push_back(X0 + X0 / S0 * (s.rates[k + 1] - S0));
        if (!(X > 0.0) || !std::isfinite(X)) {
            rep.bankrupt = true;
            rep.wealth.push_back(X);
            break;
        }
        rep.wealth.push_back(X);
    }
    rep.n_days = static_cast<int>(rep.wealth.size());
    const double S_end = s.rates[rep.wealth.size() - 1];
    rep.total_return = rep.wealth.back() / X0 - 1.0;
    rep.max_drawdown = max_drawdown(rep.wealth);
    rep.benchmark_return = S_end / S0 - 1.0;
    rep.benchmark_drawdown = max_drawdown(rep.benchmark_wealth);
    return rep;
}

}  // namespace mcev
