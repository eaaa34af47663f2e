#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "mcev/errors.hpp"

namespace mcev {

/// How the default-intensity multiplier enters the squared-Sharpe potential of
/// the linear pricing PDE.  Model uses c*a^2, the coefficient the SDE actually
/// produces; Unscaled uses c itself, the convention of the classical printed
/// CIR constants.
enum class PotentialScaling { Model, Unscaled };

inline std::string_view to_string(PotentialScaling s) {
    return s == PotentialScaling::Model ? "model" : "unscaled";
}

inline PotentialScaling parse_scaling(std::string_view s) {
    if (s == "model") return PotentialScaling::Model;
    if (s == "unscaled") return PotentialScaling::Unscaled;
    throw DomainError("unknown potential scaling '" + std::string(s) + "' (expected model or unscaled)");
}

/// dS/S = (alpha + c a^2 S^{2 beta}) dt + a S^beta dW
struct MCEVParams {
    double a;
    double beta;
    double c;
    double alpha;
    double r;
    PotentialScaling scaling = PotentialScaling::Model;

    MCEVParams(double a_, double beta_, double c_, double alpha_, double r_,
               PotentialScaling scaling_ = PotentialScaling::Model)
        : a(a_), beta(beta_), c(c_), alpha(alpha_), r(r_), scaling(scaling_) {
        validate();
    }

    void validate() const {
        if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("MCEV: a must be > 0");
        if (beta == 0.0 || !std::isfinite(beta)) throw DomainError("MCEV: beta must be nonzero");
        if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("MCEV: c must be >= 0");
        if (!std::isfinite(alpha)) throw DomainError("MCEV: alpha must be finite");
        if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("MCEV: r must be >= 0");
    }

    /// Coefficient of S^beta in the Sharpe-ratio potential.
    double potential_c() const { return scaling == PotentialScaling::Model ? c * a * a : c; }
};

/// U(x) = x^gamma / gamma
struct UtilityParams {
    double gamma;
    double delta;

    explicit UtilityParams(double gamma_) : gamma(gamma_), delta(0.0) {
        if (!(gamma_ < 1.0) || gamma_ == 0.0 || !std::isfinite(gamma_)) {
            throw DomainError("utility: gamma must satisfy gamma < 1 and gamma != 0");
        }
        delta = 1.0 / (1.0 - gamma_);
    }

    double utility(double x) const { return std::pow(x, gamma) / gamma; }
};

struct DerivedConstants {
    double delta;
    double Lambda;
    double lambda;
    double eta;
    double Q;
    double R;
    double theta;
    double omega;
};

inline DerivedConstants derive_constants(const MCEVParams& m, const UtilityParams& u) {
    m.validate();
    const double d = u.delta, g = u.gamma;
    const double a2 = m.a * m.a, b = m.beta;
    const double disc = m.alpha * m.alpha - g * m.r * m.r;
    if (!(disc > 0.0)) {
        throw DomainError("Lambda undefined: alpha^2 - gamma r^2 = " + std::to_string(disc) + " must be > 0");
    }
    DerivedConstants k{};
    k.delta = d;
    k.Lambda = std::sqrt(d) * std::sqrt(disc) / (a2 * std::abs(b));
    k.lambda = -0.5 - (0.5 - d * m.c) / (2.0 * b);

    const double ct = m.potential_c();
    const double lp = k.lambda + 0.5;
    const double radicand = lp * lp + d * (1.0 - d) * ct * ct / (4.0 * a2 * a2 * b * b);
    if (radicand < 0.0) throw DomainError("eta radicand is negative: " + std::to_string(radicand));
    k.eta = std::sqrt(radicand);

    k.Q = d * (m.alpha - g * m.r) / (k.Lambda * b * a2);
    k.R = g * d * m.r / (a2 * b * b * k.Lambda) - 2.0 * k.Q * k.lambda -
          d * (1.0 - d) * (m.alpha - m.r) * ct / (k.Lambda * a2 * a2 * b * b);
    k.theta = 0.5 + k.eta - k.lambda;
    k.omega = 1.0 + 2.0 * k.eta;
    return k;
}

/// z = Lambda S^{-2 beta}
inline double to_z(double S, const DerivedConstants& d, double beta) {
    if (!(S > 0.0)) throw DomainError("to_z requires S > 0");
    return d.Lambda * std::pow(S, -2.0 * beta);
}

/// Inverse of to_z.
inline double from_z(double z, const DerivedConstants& d, double beta) {
    if (!(z > 0.0)) throw DomainError("from_z requires z > 0");
    return std::pow(d.Lambda / z, 1.0 / (2.0 * beta));
}

/// tau = a^2 beta^2 Lambda (T - t)
inline double to_tau(double t, double T, const MCEVParams& m, const DerivedConstants& d) {
    if (t > T) throw DomainError("to_tau requires t <= T");
    return m.a * m.a * m.beta * m.beta * d.Lambda * (T - t);
}

/// A, B, D at one tau, with the logs of the pieces that overflow for large tau.
struct TimeFunctions {
    double A;
    double B;
    double D;
    double log_D;
    double log_2sinh;  // log(2 sinh tau)
};

inline TimeFunctions time_functions(double tau, double Q) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("time_functions requires finite tau > 0");
    const double th = std::tanh(tau);
    const double ratio = 1.0 + Q * th;  // (cosh + Q sinh) / cosh
    if (!(ratio > 0.0)) throw DomainError("coth(tau) + Q vanishes or is negative: singular time functions");

    double log_w;   // log(cosh tau + Q sinh tau)
    double log_2s;  // log(2 sinh tau)
    if (tau < 1.0) {
        log_w = std::log(std::cosh(tau) + Q * std::sinh(tau));
        log_2s = std::log(2.0 * std::sinh(tau));
    } else {
        const double e2 = std::exp(-2.0 * tau);
        log_w = tau + std::log(0.5 * ((1.0 + Q) + (1.0 - Q) * e2));
        log_2s = tau + std::log1p(-e2);
    }
    TimeFunctions f{};
    f.A = std::exp(-log_2s - log_w);
    f.B = (Q * Q - 1.0) * th / (2.0 * ratio);
    f.log_D = 2.0 * log_w;
    f.D = std::exp(f.log_D);
    f.log_2sinh = log_2s;
    return f;
}

}  // namespace mcev
