#pragma once

// Confluent hypergeometric (Kummer first-kind) function, the ratio
//   R(theta, omega, x) = M(theta - 1, omega, x) / M(theta, omega, x)
// by four independent routes, and the Bessel / Whittaker / log-gamma helpers
// the closed-form policy needs.  Everything here is a pure function of its
// arguments; RatioKernel tables are immutable once constructed.

#include <array>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcev/errors.hpp"

namespace mcev {

inline constexpr int kDefaultMaxTerms = 10000;
inline constexpr int kDefaultMaxDepth = 10000;

/// (sign, log|v|) pair for values that overflow binary64.
struct SignedLog {
    int sign = 1;
    double log_abs = 0.0;

    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

enum class RatioMethod { SmallXSeries, LargeXSeries, ContinuedFraction, DirectQuotient };

inline std::string_view to_string(RatioMethod m) {
    switch (m) {
        case RatioMethod::SmallXSeries: return "small_x_series";
        case RatioMethod::LargeXSeries: return "large_x_series";
        case RatioMethod::ContinuedFraction: return "continued_fraction";
        case RatioMethod::DirectQuotient: return "direct_quotient";
    }
    return "unknown";
}

struct RatioParams {
    double theta;
    double omega;
    double x;
};

/// Result of a ratio evaluation.  est_error is a relative error estimate.
struct RatioEvaluation {
    double value = 0.0;
    RatioMethod method = RatioMethod::SmallXSeries;
    int terms_used = 1;
    double est_error = 0.0;
};

struct SeriesCoefficients {
    std::vector<double> coeffs;
};

struct RatioConfig {
    double tol = 1e-10;
    int max_terms = kDefaultMaxTerms;
    int max_depth = kDefaultMaxDepth;
    /// Small/large series switch point; defaults to max(10, |theta| + |omega|).
    std::optional<double> crossover;

    double crossover_for(double theta, double omega) const {
        return crossover.value_or(std::max(10.0, std::abs(theta) + std::abs(omega)));
    }
};

namespace detail {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kMaxLog = 709.78;  // log(DBL_MAX)

inline bool is_nonpositive_integer(double v) { return v <= 0.0 && v == std::nearbyint(v); }

inline void check_omega(double omega) {
    if (!std::isfinite(omega) || is_nonpositive_integer(omega)) {
        throw DomainError("omega = " + std::to_string(omega) +
                          " is a pole of the Kummer series (zero or negative integer)");
    }
}

inline void check_ratio_params(const RatioParams& p) {
    check_omega(p.omega);
    if (!std::isfinite(p.theta)) throw DomainError("theta must be finite");
    if (!(p.x >= 0.0) || !std::isfinite(p.x)) {
        throw DomainError("ratio argument x must be finite and >= 0, got " + std::to_string(p.x));
    }
}

inline void check_tol(double tol) {
    if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
}

// Lanczos approximation, g = 7, n = 9; valid for x >= 0.5.
inline double lanczos_log_gamma(double x) {
    static constexpr std::array<double, 9> c = {
        0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,   12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    x -= 1.0;
    double sum = c[0];
    for (std::size_t i = 1; i < c.size(); ++i) sum += c[i] / (x + static_cast<double>(i));
    const double t = x + 7.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (x + 0.5) * std::log(t) - t + std::log(sum);
}

}  // namespace detail

/// log Gamma(x) for x > 0.
inline double log_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("log_gamma requires x > 0, got " + std::to_string(x));
    }
    if (x == 1.0 || x == 2.0) return 0.0;
    if (x < 0.5) return detail::lanczos_log_gamma(x + 1.0) - std::log(x);
    return detail::lanczos_log_gamma(x);
}

namespace detail {

// log|Gamma(x)| and its sign for any real x; poles give +inf with sign 0.
inline SignedLog log_abs_gamma(double x) {
    if (x > 0.0) return {1, log_gamma(x)};
    if (is_nonpositive_integer(x)) return {0, kInf};
    const double fl = std::floor(x);
    const double s = std::sin(std::numbers::pi * (x - fl));  // > 0
    const int sign = (static_cast<long long>(fl) % 2 == 0) ? 1 : -1;
    return {sign, std::log(std::numbers::pi) - std::log(s) - log_gamma(1.0 - x)};
}

// Incremental solution of the series-quotient triangular system
//   sum_{i+j=s} b_i c_j = a_s.
struct IncrementalQuotient {
    std::vector<double> a, b, c;

    void push(double as, double bs) {
        a.push_back(as);
        b.push_back(bs);
        const std::size_t s = c.size();
        double acc = as;
        for (std::size_t j = 0; j < s; ++j) acc -= b[s - j] * c[j];
        c.push_back(acc / b[0]);
    }
};

// c_s of M(theta-1,omega,x)/M(theta,omega,x) = sum c_s x^s, generated lazily.
class SmallCoefficientStream {
public:
    SmallCoefficientStream(double theta, double omega) : theta_(theta), omega_(omega) {}

    double operator()(int s) {
        while (static_cast<int>(q_.c.size()) <= s) {
            const int k = static_cast<int>(q_.c.size());
            if (k > 0) {
                const double denom = static_cast<double>(k) * (omega_ + k - 1);
                a_ *= (theta_ - 2.0 + k) / denom;
                b_ *= (theta_ - 1.0 + k) / denom;
            }
            q_.push(a_, b_);
        }
        return q_.c[static_cast<std::size_t>(s)];
    }

private:
    double theta_, omega_;
    double a_ = 1.0, b_ = 1.0;
    IncrementalQuotient q_;
};

// d_s of the inverse-power expansion, quotient of the two asymptotic series
//   sum (2-theta)_s (omega-theta+1)_s / s!  over  sum (1-theta)_s (omega-theta)_s / s!.
class LargeCoefficientStream {
public:
    LargeCoefficientStream(double theta, double omega) : theta_(theta), omega_(omega) {}

    double operator()(int s) {
        while (static_cast<int>(q_.c.size()) <= s) {
            const int k = static_cast<int>(q_.c.size());
            if (k > 0) {
                const double kk = k - 1;
                p_ *= (2.0 - theta_ + kk) * (omega_ - theta_ + 1.0 + kk) / k;
                q_s_ *= (1.0 - theta_ + kk) * (omega_ - theta_ + kk) / k;
            }
            q_.push(p_, q_s_);
        }
        return q_.c[static_cast<std::size_t>(s)];
    }

private:
    double theta_, omega_;
    double p_ = 1.0, q_s_ = 1.0;
    IncrementalQuotient q_;
};

inline ConvergenceError fail(RatioMethod m, const std::string& why, int terms, double est) {
    return ConvergenceError(std::string(to_string(m)) + ": " + why, terms, est);
}

template <class Coef>
RatioEvaluation sum_small_series(Coef&& coef, double x, double tol, int max_terms) {
    constexpr auto method = RatioMethod::SmallXSeries;
    if (x == 0.0) return {1.0, method, 1, 0.0};
    double sum = coef(0);
    double abs_sum = std::abs(sum);
    double xs = 1.0;
    double prev = kInf;
    for (int s = 1; s < max_terms; ++s) {
        xs *= x;
        const double cs = coef(s);
        const double t = cs * xs;
        if (!std::isfinite(t)) throw fail(method, "coefficient overflow", s, kInf);
        sum += t;
        abs_sum += std::abs(t);
        const double scale = std::abs(sum);
        const double rounding = 8.0 * kEps * abs_sum / scale;
        if (rounding > tol) throw fail(method, "series diverges or cancels at this x", s + 1, rounding);
        if (std::abs(t) <= 0.1 * tol * scale && prev <= 0.1 * tol * scale) {
            return {sum, method, s + 1, (std::abs(t) + prev) / scale + rounding};
        }
        prev = std::abs(t);
    }
    throw fail(method, "term cap reached", max_terms, prev / std::abs(sum));
}

// Recessive (exponentially small) share of M(a, omega, x) that the inverse-power
// expansion omits, as log of its size relative to the dominant part.
inline double log_recessive_share(double a, double omega, double x) {
    const SignedLog ga = log_abs_gamma(a);
    const SignedLog gba = log_abs_gamma(omega - a);
    if (gba.sign == 0) return -kInf;  // 1/Gamma(omega - a) = 0
    if (ga.sign == 0) return kInf;    // dominant part vanishes
    return ga.log_abs - gba.log_abs - x + (omega - 2.0 * a) * std::log(x);
}

template <class Coef>
RatioEvaluation sum_large_series(Coef&& coef, double theta, double omega, double x, double tol,
                                 int max_terms) {
    constexpr auto method = RatioMethod::LargeXSeries;
    if (!(x > 0.0)) throw fail(method, "requires x > 0", 0, kInf);
    const double lead = (theta - 1.0) / x;
    if (lead == 0.0) throw fail(method, "leading coefficient theta - 1 vanishes", 1, kInf);

    const double recessive =
        std::exp(log_recessive_share(theta, omega, x)) + std::exp(log_recessive_share(theta - 1.0, omega, x));

    const double inv = 1.0 / x;
    double sum = coef(0);
    double xs = 1.0;
    double last = kInf;
    int s = 1;
    double err = kInf;
    for (; s < max_terms; ++s) {
        xs *= inv;
        const double t = coef(s) * xs;
        if (!std::isfinite(t)) break;
        if (std::abs(t) > last) break;  // optimal truncation: terms started growing
        sum += t;
        if (std::abs(t) <= 0.1 * tol * std::abs(sum) && last <= 0.1 * tol * std::abs(sum)) {
            err = std::abs(t);
            ++s;
            break;
        }
        last = std::abs(t);
        err = last;
    }
    const double est = err / std::abs(sum) + recessive + 4.0 * kEps * s;
    if (!(est <= tol)) throw fail(method, "smallest asymptotic term above tolerance", s, est);
    return {lead * sum, method, s, est};
}

}  // namespace detail

/// Coefficients c of numer/denom = sum c_s x^s, for s = 0..n.
inline SeriesCoefficients series_quotient(const SeriesCoefficients& numer, const SeriesCoefficients& denom,
                                          int n) {
    if (n < 0) throw DomainError("series_quotient requires n >= 0");
    if (denom.coeffs.empty() || denom.coeffs.front() == 0.0) {
        throw DomainError("series_quotient: leading denominator coefficient is zero");
    }
    detail::IncrementalQuotient q;
    auto at = [](const std::vector<double>& v, int s) {
        return s < static_cast<int>(v.size()) ? v[static_cast<std::size_t>(s)] : 0.0;
    };
    for (int s = 0; s <= n; ++s) q.push(at(numer.coeffs, s), at(denom.coeffs, s));
    return {std::move(q.c)};
}

/// c_0..c_n of the small-argument expansion of the Kummer ratio.
inline SeriesCoefficients small_x_coefficients(double theta, double omega, int n) {
    detail::check_omega(omega);
    detail::SmallCoefficientStream stream(theta, omega);
    SeriesCoefficients out;
    for (int s = 0; s <= n; ++s) out.coeffs.push_back(stream(s));
    return out;
}

/// d_0..d_n of the inverse-power expansion (theta - 1)/x * sum d_s x^-s.
inline SeriesCoefficients large_x_coefficients(double theta, double omega, int n) {
    detail::check_omega(omega);
    detail::LargeCoefficientStream stream(theta, omega);
    SeriesCoefficients out;
    for (int s = 0; s <= n; ++s) out.coeffs.push_back(stream(s));
    return out;
}

/// Kummer series M(theta, omega, x) = sum (theta)_s / ((omega)_s s!) x^s, x >= 0.
/// Throws RangeError when the value overflows; use kummer_m_log there.
inline double kummer_m(double theta, double omega, double x, double tol = 1e-15,
                       int max_terms = kDefaultMaxTerms);

namespace detail {

// log of e^{-x} M(theta, omega, x) via the inverse-power expansion; nullopt if
// the truncation error or the recessive part exceeds tol.
inline std::optional<SignedLog> kummer_log_scaled_asymptotic(double theta, double omega, double x,
                                                             double tol, int max_terms) {
    if (is_nonpositive_integer(theta)) return std::nullopt;
    double sum = 1.0, t = 1.0, last = kInf, err = kInf;
    for (int s = 0; s < max_terms; ++s) {
        const double next = t * (1.0 - theta + s) * (omega - theta + s) / ((s + 1.0) * x);
        if (next == 0.0) {
            err = 0.0;
            break;
        }
        if (std::abs(next) > last || !std::isfinite(next)) break;
        sum += next;
        t = next;
        last = std::abs(next);
        err = last;
        if (last <= 0.01 * tol * std::abs(sum)) break;
    }
    const double rec = std::exp(log_recessive_share(theta, omega, x));
    if (!(err / std::abs(sum) + rec <= tol)) return std::nullopt;
    const SignedLog go = log_abs_gamma(omega);
    const SignedLog gt = log_abs_gamma(theta);
    const int sign = go.sign * gt.sign * (sum > 0 ? 1 : -1);
    return SignedLog{sign, go.log_abs - gt.log_abs + (theta - omega) * std::log(x) + std::log(std::abs(sum))};
}

// Scaled power-series summation of e^{-x} M in log form; never overflows.
inline SignedLog kummer_log_scaled_series(double theta, double omega, double x, double tol, int max_terms) {
    constexpr double kBig = 1e200;
    const double log_big = std::log(kBig);
    double sum = 1.0, term = 1.0, shift = 0.0;
    for (int s = 0; s < max_terms; ++s) {
        term *= (theta + s) * x / ((omega + s) * (s + 1.0));
        sum += term;
        if (term == 0.0) return {sum > 0 ? 1 : (sum < 0 ? -1 : 0), shift + std::log(std::abs(sum)) - x};
        if (std::abs(term) > kBig || std::abs(sum) > kBig) {
            term /= kBig;
            sum /= kBig;
            shift += log_big;
        }
        const double q = std::abs((theta + s + 1.0) * x / ((omega + s + 1.0) * (s + 2.0)));
        if (theta + s + 1.0 > 0.0 && omega + s + 1.0 > 0.0 && q < 1.0 &&
            std::abs(term) * q / (1.0 - q) <= tol * std::abs(sum)) {
            const int sign = sum > 0 ? 1 : (sum < 0 ? -1 : 0);
            return {sign, shift + std::log(std::abs(sum)) - x};
        }
    }
    throw ConvergenceError("kummer_m: term cap reached", max_terms, kInf);
}

}  // namespace detail

/// (sign, log|e^{-x} M(theta, omega, x)|); the natural scale for large x.
inline SignedLog kummer_m_log_scaled(double theta, double omega, double x, double tol = 1e-15,
                                     int max_terms = kDefaultMaxTerms) {
    detail::check_omega(omega);
    detail::check_tol(tol);
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("kummer_m requires finite x >= 0");
    if (x == 0.0) return {1, 0.0};
    if (x >= 30.0) {
        if (auto r = detail::kummer_log_scaled_asymptotic(theta, omega, x, tol, max_terms)) return *r;
    }
    return detail::kummer_log_scaled_series(theta, omega, x, tol, max_terms);
}

/// (sign, log|M(theta, omega, x)|).
inline SignedLog kummer_m_log(double theta, double omega, double x, double tol = 1e-15,
                              int max_terms = kDefaultMaxTerms) {
    SignedLog r = kummer_m_log_scaled(theta, omega, x, tol, max_terms);
    r.log_abs += x;
    return r;
}

inline double kummer_m(double theta, double omega, double x, double tol, int max_terms) {
    detail::check_omega(omega);
    detail::check_tol(tol);
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("kummer_m requires finite x >= 0");
    if (x > 600.0) {
        const SignedLog l = kummer_m_log(theta, omega, x, tol, max_terms);
        if (l.log_abs > detail::kMaxLog) throw RangeError("kummer_m overflows binary64; use kummer_m_log");
        return l.value();
    }
    double term = 1.0, sum = 1.0;
    for (int s = 0; s < max_terms; ++s) {
        term *= (theta + s) * x / ((omega + s) * (s + 1.0));
        sum += term;
        if (term == 0.0) return sum;
        if (!std::isfinite(sum)) throw RangeError("kummer_m overflows binary64; use kummer_m_log");
        const double q = std::abs((theta + s + 1.0) * x / ((omega + s + 1.0) * (s + 2.0)));
        if (theta + s + 1.0 > 0.0 && omega + s + 1.0 > 0.0 && q < 1.0 &&
            std::abs(term) * q / (1.0 - q) <= tol * std::abs(sum)) {
            return sum;
        }
    }
    throw ConvergenceError("kummer_m: term cap reached", max_terms, detail::kInf);
}

/// Ratio via the power series sum c_s x^s (accurate for x well inside the
/// radius set by the nearest complex zero of M(theta, omega, .)).
inline RatioEvaluation ratio_small_x(const RatioParams& p, double tol = 1e-10, int max_terms = kDefaultMaxTerms) {
    detail::check_ratio_params(p);
    detail::check_tol(tol);
    detail::SmallCoefficientStream stream(p.theta, p.omega);
    return detail::sum_small_series(stream, p.x, tol, max_terms);
}

/// Ratio via (theta - 1)/x * sum d_s x^-s with optimal truncation.
inline RatioEvaluation ratio_large_x(const RatioParams& p, double tol = 1e-10, int max_terms = kDefaultMaxTerms) {
    detail::check_ratio_params(p);
    detail::check_tol(tol);
    detail::LargeCoefficientStream stream(p.theta, p.omega);
    return detail::sum_large_series(stream, p.theta, p.omega, p.x, tol, max_terms);
}

/// Ratio via the continued fraction generated by the omega-direction contiguous
/// relation; M is the minimal solution in that direction, so the fraction
///   u = 1/(omega + x - x(omega+1-theta)/(omega+1 + x - x(omega+2-theta)/(...)))
/// converges to M(theta, omega+1, x) / (omega M(theta, omega, x)) and the ratio is
/// 1 - x u.  Evaluated by the modified Lentz method.
inline RatioEvaluation ratio_continued_fraction(const RatioParams& p, double tol = 1e-10,
                                                int max_depth = kDefaultMaxDepth) {
    detail::check_ratio_params(p);
    detail::check_tol(tol);
    constexpr auto method = RatioMethod::ContinuedFraction;
    constexpr double tiny = 1e-300;
    const double x = p.x;
    if (x == 0.0) return {1.0, method, 1, 0.0};

    double f = tiny, C = tiny, D = 0.0;
    double est = detail::kInf;
    for (int k = 1; k <= max_depth; ++k) {
        const double ak = (k == 1) ? 1.0 : -x * (p.omega + k - 1 - p.theta);
        const double bk = p.omega + k - 1 + x;
        D = bk + ak * D;
        if (D == 0.0) D = tiny;
        D = 1.0 / D;
        C = bk + ak / C;
        if (C == 0.0) C = tiny;
        const double delta = C * D;
        f *= delta;
        const double value = 1.0 - x * f;
        const double amplification = std::abs(x * f) / std::abs(value);
        const double rounding = 4.0 * detail::kEps * (1.0 + amplification) * std::sqrt(static_cast<double>(k));
        est = std::abs(delta - 1.0) * amplification + rounding;
        if (std::abs(delta - 1.0) * amplification <= 0.1 * tol) {
            if (!(est <= tol)) throw detail::fail(method, "cancellation in 1 - x u", k, est);
            return {value, method, k, est};
        }
    }
    throw detail::fail(method, "depth cap reached", max_depth, est);
}

/// Ratio as a quotient of two log-scaled Kummer evaluations.
inline RatioEvaluation ratio_direct_quotient(const RatioParams& p, double tol = 1e-10,
                                             int max_terms = kDefaultMaxTerms) {
    detail::check_ratio_params(p);
    detail::check_tol(tol);
    const double inner = std::min(1e-15, tol * 1e-3);
    const SignedLog num = kummer_m_log_scaled(p.theta - 1.0, p.omega, p.x, inner, max_terms);
    const SignedLog den = kummer_m_log_scaled(p.theta, p.omega, p.x, inner, max_terms);
    if (den.sign == 0) throw detail::fail(RatioMethod::DirectQuotient, "denominator vanishes", 0, detail::kInf);
    const double value = num.sign * den.sign * std::exp(num.log_abs - den.log_abs);
    const double est = 8.0 * detail::kEps * (1.0 + std::abs(num.log_abs) + std::abs(den.log_abs));
    return {value, RatioMethod::DirectQuotient, 2, est};
}

/// Unscaled double-precision quotient; overflows for large x (benchmark baseline).
inline double ratio_direct_naive(const RatioParams& p) {
    auto plain_sum = [](double a, double b, double x) {
        double term = 1.0, sum = 1.0;
        for (int s = 0; s < kDefaultMaxTerms && term != 0.0 && std::isfinite(sum); ++s) {
            term *= (a + s) * x / ((b + s) * (s + 1.0));
            sum += term;
            if (s > x && std::abs(term) < 1e-17 * std::abs(sum)) break;
        }
        return sum;
    };
    return plain_sum(p.theta - 1.0, p.omega, p.x) / plain_sum(p.theta, p.omega, p.x);
}

namespace detail {

template <class Small, class Large>
RatioEvaluation dispatch(const RatioParams& p, const RatioConfig& cfg, Small&& small, Large&& large) {
    if (p.x == 0.0) return {1.0, RatioMethod::SmallXSeries, 1, 0.0};
    std::string failures;
    auto attempt = [&](auto&& fn) -> std::optional<RatioEvaluation> {
        try {
            return fn();
        } catch (const ConvergenceError& e) {
            failures += std::string(failures.empty() ? "" : "; ") + e.what();
            return std::nullopt;
        }
    };
    const bool use_small = p.x < cfg.crossover_for(p.theta, p.omega);
    std::optional<RatioEvaluation> r = use_small ? attempt(small) : attempt(large);
    if (!r) r = attempt([&] { return ratio_continued_fraction(p, cfg.tol, cfg.max_depth); });
    if (!r) {
        r = attempt([&] {
            RatioEvaluation d = ratio_direct_quotient(p, cfg.tol, cfg.max_terms);
            if (!(d.est_error <= cfg.tol)) throw fail(RatioMethod::DirectQuotient, "cancellation", 2, d.est_error);
            return d;
        });
    }
    if (!r) throw ConvergenceError("ratio: all methods failed (" + failures + ")", 0, kInf);
    return *r;
}

}  // namespace detail

/// Dispatcher: small-x series below the crossover, large-x series above, then
/// the continued fraction and the direct quotient as fallbacks.
inline RatioEvaluation ratio(const RatioParams& p, const RatioConfig& cfg = {}) {
    detail::check_ratio_params(p);
    detail::check_tol(cfg.tol);
    return detail::dispatch(
        p, cfg, [&] { return ratio_small_x(p, cfg.tol, cfg.max_terms); },
        [&] { return ratio_large_x(p, cfg.tol, cfg.max_terms); });
}

/// Ratio evaluator for fixed (theta, omega) with precomputed series tables;
/// immutable after construction and safe to share across threads.
class RatioKernel {
public:
    static constexpr int kSmallTable = 256;
    static constexpr int kLargeTable = 160;

    RatioKernel(double theta, double omega, RatioConfig cfg = {}) : theta_(theta), omega_(omega), cfg_(cfg) {
        detail::check_ratio_params({theta, omega, 0.0});
        detail::check_tol(cfg_.tol);
        detail::SmallCoefficientStream small(theta, omega);
        for (int s = 0; s < std::min(kSmallTable, cfg_.max_terms); ++s) {
            const double c = small(s);
            if (!std::isfinite(c)) break;
            small_.push_back(c);
        }
        detail::LargeCoefficientStream large(theta, omega);
        for (int s = 0; s < std::min(kLargeTable, cfg_.max_terms); ++s) {
            const double d = large(s);
            if (!std::isfinite(d)) break;
            large_.push_back(d);
        }
    }

    double theta() const { return theta_; }
    double omega() const { return omega_; }
    const RatioConfig& config() const { return cfg_; }

    RatioEvaluation evaluate(double x) const {
        const RatioParams p{theta_, omega_, x};
        detail::check_ratio_params(p);
        auto table = [](const std::vector<double>& v) {
            return [&v](int s) {
                return s < static_cast<int>(v.size()) ? v[static_cast<std::size_t>(s)]
                                                      : std::numeric_limits<double>::quiet_NaN();
            };
        };
        const int small_cap = static_cast<int>(small_.size());
        const int large_cap = static_cast<int>(large_.size()) + 1;
        return detail::dispatch(
            p, cfg_, [&] { return detail::sum_small_series(table(small_), x, cfg_.tol, small_cap); },
            [&] { return detail::sum_large_series(table(large_), theta_, omega_, x, cfg_.tol, large_cap); });
    }

    double operator()(double x) const { return evaluate(x).value; }

private:
    double theta_, omega_;
    RatioConfig cfg_;
    std::vector<double> small_, large_;
};

// ---------------------------------------------------------------------------
// Modified Bessel function of the first kind, real order nu >= 0.
// ---------------------------------------------------------------------------

namespace detail {

inline void check_bessel(double nu, double x) {
    if (!(nu >= 0.0) || !std::isfinite(nu)) throw DomainError("bessel_i requires order >= 0");
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("bessel_i requires finite x >= 0");
}

// Hankel expansion of e^{-x} I_nu(x); nullopt when not accurate to ~1e-16.
inline std::optional<double> log_bessel_i_asymptotic(double nu, double x) {
    const double mu = 4.0 * nu * nu;
    double sum = 1.0, t = 1.0, last = kInf;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        const double next = -t * (mu - odd * odd) / (8.0 * k * x);
        if (next == 0.0) return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(sum);
        if (std::abs(next) > last) return std::nullopt;
        sum += next;
        t = next;
        last = std::abs(next);
        if (last <= 1e-17 * std::abs(sum)) return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(sum);
    }
    return std::nullopt;
}

inline double log_bessel_i_series(double nu, double x) {
    constexpr double kBig = 1e200;
    const double half = 0.5 * x;
    const double log_t0 = nu * std::log(half) - log_gamma(nu + 1.0);
    double sum = 1.0, term = 1.0, shift = 0.0;
    for (int k = 0; k < kDefaultMaxTerms; ++k) {
        const double r = half * half / ((k + 1.0) * (k + 1.0 + nu));
        term *= r;
        sum += term;
        if (sum > kBig) {
            sum /= kBig;
            term /= kBig;
            shift += std::log(kBig);
        }
        const double rn = half * half / ((k + 2.0) * (k + 2.0 + nu));
        if (rn < 1.0 && term * rn / (1.0 - rn) <= 0.25 * kEps * sum) break;
    }
    return log_t0 + shift + std::log(sum);
}

}  // namespace detail

/// log I_nu(x); -inf at x = 0 for nu > 0.
inline double log_bessel_i(double nu, double x) {
    detail::check_bessel(nu, x);
    if (x == 0.0) return nu == 0.0 ? 0.0 : -detail::kInf;
    if (x >= std::max(25.0, nu * nu)) {
        if (auto r = detail::log_bessel_i_asymptotic(nu, x)) return *r;
    }
    return detail::log_bessel_i_series(nu, x);
}

/// e^{-x} I_nu(x); finite for every x >= 0.
inline double bessel_i_scaled(double nu, double x) {
    detail::check_bessel(nu, x);
    if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
    return std::exp(log_bessel_i(nu, x) - x);
}

/// I_nu(x); throws RangeError on overflow (use bessel_i_scaled).
inline double bessel_i(double nu, double x) {
    const double l = log_bessel_i(nu, x);
    if (l > detail::kMaxLog) throw RangeError("bessel_i overflows binary64; use bessel_i_scaled");
    return std::exp(l);
}

// ---------------------------------------------------------------------------
// Whittaker M through M_{lam,eta}(x) = e^{-x/2} x^{1/2+eta} M(theta, omega, x).
// ---------------------------------------------------------------------------

inline SignedLog whittaker_m_log(double lam, double eta, double x, double tol = 1e-15) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("whittaker_m requires finite x > 0");
    const double theta = 0.5 + eta - lam;
    const double omega = 1.0 + 2.0 * eta;
    SignedLog k = kummer_m_log_scaled(theta, omega, x, tol);
    k.log_abs += 0.5 * x + (0.5 + eta) * std::log(x);
    return k;
}

inline double whittaker_m(double lam, double eta, double x, double tol = 1e-15) {
    const SignedLog l = whittaker_m_log(lam, eta, x, tol);
    if (l.log_abs > detail::kMaxLog) throw RangeError("whittaker_m overflows binary64; use whittaker_m_log");
    return l.value();
}

}  // namespace mcev
