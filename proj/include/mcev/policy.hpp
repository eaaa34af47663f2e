#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mcev/errors.hpp"
#include "mcev/model.hpp"
#include "mcev/specialfn.hpp"

namespace mcev {

struct PolicyInput {
    double X;
    double S;
    double t;
    double T;

    void validate() const {
        if (!(X > 0.0) || !std::isfinite(X)) throw DomainError("policy: wealth X must be > 0");
        if (!(S > 0.0) || !std::isfinite(S)) throw DomainError("policy: price S must be > 0");
        if (!(t <= T)) throw DomainError("policy: requires t <= T");
    }
};

/// dS = kappa (s_bar - S) dt + a sqrt(S) dW
struct CIRParams {
    double kappa;
    double s_bar;
    double a;

    CIRParams(double kappa_, double s_bar_, double a_) : kappa(kappa_), s_bar(s_bar_), a(a_) {
        if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DomainError("CIR: kappa must be > 0");
        if (!(s_bar > 0.0) || !std::isfinite(s_bar)) throw DomainError("CIR: s_bar must be > 0");
        if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("CIR: a must be > 0");
    }

    /// 2 kappa s_bar > a^2: the process stays strictly positive.
    bool feller() const { return 2.0 * kappa * s_bar > a * a; }
};

/// The square-root process as an M-CEV model with beta = -1/2 and r = 0.
inline MCEVParams to_mcev(const CIRParams& c, PotentialScaling scaling = PotentialScaling::Model) {
    return MCEVParams(c.a, -0.5, c.kappa * c.s_bar / (c.a * c.a), -c.kappa, 0.0, scaling);
}

inline double log_green_function(double z, double tau, double xi, const DerivedConstants& d) {
    if (!(z > 0.0) || !(tau > 0.0) || !(xi > 0.0)) {
        throw DomainError("green_function requires z, tau, xi > 0");
    }
    const double sh = std::sinh(tau);
    const double sz = std::sqrt(z), sx = std::sqrt(xi);
    const double half_s = std::sinh(0.5 * tau);
    // (z + xi) coth(tau)/2 - sqrt(z xi)/sinh(tau), without cancellation
    const double spread = ((sz - sx) * (sz - sx) + (z + xi) * 2.0 * half_s * half_s) / (2.0 * sh);
    const double arg = sz * sx / sh;
    const double log_scaled_bessel = log_bessel_i(2.0 * d.eta, arg) - arg;
    const double out = std::log(0.5) + d.R * tau + 0.5 * d.Q * (z - xi) - spread +
                       (d.lambda + 0.5) * (std::log(z) - std::log(xi)) - std::log(sh) + log_scaled_bessel;
    if (std::isnan(out) || out == detail::kInf) throw RangeError("green_function: log value not representable");
    return out;
}

/// Transition kernel F_G(z, tau; xi) of the linear pricing PDE in (z, tau).
inline double green_function(double z, double tau, double xi, const DerivedConstants& d) {
    const double l = log_green_function(z, tau, xi, d);
    if (l > detail::kMaxLog) throw RangeError("green_function overflows binary64");
    return std::exp(l);
}

/// log f in the transformed coordinates; tau > 0.
inline double log_value_multiplier_z(double z, double tau, const DerivedConstants& d) {
    if (!(z > 0.0)) throw DomainError("value_multiplier requires z > 0");
    const TimeFunctions tf = time_functions(tau, d.Q);
    const double log_y = std::log(z) - tf.log_2sinh - 0.5 * tf.log_D;
    const double y = std::exp(log_y);
    const SignedLog m = kummer_m_log_scaled(d.theta, d.omega, y);
    if (m.sign <= 0) throw DomainError("value_multiplier: Kummer factor is not positive");
    return d.R * tau + z * tf.B + d.lambda * tf.log_D + log_gamma(d.theta) - log_gamma(d.omega) +
           (d.omega - d.theta) * log_y + m.log_abs;
}

inline double log_value_multiplier(double S, double t, double T, const MCEVParams& m, const UtilityParams& u) {
    if (!(S > 0.0)) throw DomainError("value_multiplier requires S > 0");
    if (t > T) throw DomainError("value_multiplier requires t <= T");
    if (t == T) return 0.0;
    const DerivedConstants d = derive_constants(m, u);
    return log_value_multiplier_z(to_z(S, d, m.beta), to_tau(t, T, m, d), d);
}

/// f(S, t) of the distortion J = X^gamma/gamma f^{1/delta}; f(S, T) = 1.
inline double value_multiplier(double S, double t, double T, const MCEVParams& m, const UtilityParams& u) {
    const double l = log_value_multiplier(S, t, T, m, u);
    if (l > detail::kMaxLog) throw RangeError("value_multiplier overflows binary64");
    return std::exp(l);
}

inline double value_function(const PolicyInput& inp, const MCEVParams& m, const UtilityParams& u) {
    inp.validate();
    const double l = log_value_multiplier(inp.S, inp.t, inp.T, m, u);
    return std::pow(inp.X, u.gamma) / u.gamma * std::exp(l / u.delta);
}

/// Closed-form optimal position for one parameter set.  Holds the derived
/// constants and a ratio kernel for (theta, omega); immutable and thread-safe.
class MCEVPolicy {
public:
    static constexpr double kTauFloor = 1e-8;

    MCEVPolicy(const MCEVParams& m, const UtilityParams& u, RatioConfig cfg = {})
        : m_(m), u_(u), d_(derive_constants(m, u)), kernel_(d_.theta, d_.omega, cfg) {}

    const MCEVParams& params() const { return m_; }
    const UtilityParams& utility() const { return u_; }
    const DerivedConstants& constants() const { return d_; }

    double tau(double t, double T) const { return std::max(to_tau(t, T, m_, d_), kTauFloor); }

    /// Kummer-ratio form.
    double position(const PolicyInput& inp) const {
        inp.validate();
        const double tau_eff = tau(inp.t, inp.T);
        const TimeFunctions tf = time_functions(tau_eff, d_.Q);
        const double s_pow = std::pow(inp.S, -2.0 * m_.beta);  // S^{-2 beta}
        const double x = d_.Lambda * tf.A * s_pow;
        RatioEvaluation r;
        try {
            r = kernel_.evaluate(x);
        } catch (const ConvergenceError& e) {
            throw ConvergenceError(std::string("optimal_position at S = ") + std::to_string(inp.S) + ": " + e.what(),
                                   e.terms_used(), e.est_error());
        }
        const double a2 = m_.a * m_.a, b = m_.beta, dl = d_.delta;
        const double bracket = (dl * (m_.alpha - m_.r) / a2 - 2.0 * b * d_.Lambda * tf.B) * s_pow + dl * m_.c +
                               2.0 * b * (d_.theta - d_.omega) * r.value;
        return inp.X / inp.S * bracket;
    }

    /// Whittaker-function form, evaluated through log-scaled Whittaker values.
    double position_whittaker(const PolicyInput& inp) const {
        inp.validate();
        const double tau_eff = tau(inp.t, inp.T);
        const TimeFunctions tf = time_functions(tau_eff, d_.Q);
        const double z = to_z(inp.S, d_, m_.beta);
        const double y = z * tf.A;
        const SignedLog up = whittaker_m_log(d_.lambda + 1.0, d_.eta, y);
        const SignedLog lo = whittaker_m_log(d_.lambda, d_.eta, y);
        const double w_ratio = up.sign * lo.sign * std::exp(up.log_abs - lo.log_abs);
        const double a2 = m_.a * m_.a, b = m_.beta;
        const double s2b = std::pow(inp.S, 2.0 * b);
        const double myopic = d_.delta * (m_.alpha - m_.r + m_.c * a2 * s2b) / (a2 * s2b * inp.S);
        const double dlogf_dz = tf.B + (d_.lambda + d_.eta + 0.5) / z * w_ratio;
        return inp.X * (myopic + dlogf_dz * (-2.0 * b * z / inp.S));
    }

private:
    MCEVParams m_;
    UtilityParams u_;
    DerivedConstants d_;
    RatioKernel kernel_;
};

inline double optimal_position(const PolicyInput& inp, const MCEVParams& m, const UtilityParams& u) {
    return MCEVPolicy(m, u).position(inp);
}

inline double optimal_position_whittaker(const PolicyInput& inp, const MCEVParams& m, const UtilityParams& u) {
    return MCEVPolicy(m, u).position_whittaker(inp);
}

/// General constants under the square-root substitution (r = 0).
inline DerivedConstants cir_constants(const CIRParams& c, const UtilityParams& u,
                                      PotentialScaling scaling = PotentialScaling::Model) {
    const DerivedConstants d = derive_constants(to_mcev(c, scaling), u);
    const double lam = -u.delta * c.kappa * c.s_bar / (c.a * c.a);
    if (std::abs(d.lambda - lam) > 8.0 * detail::kEps * std::max(1.0, std::abs(lam))) {
        throw std::logic_error("cir_constants: lambda does not reduce to -delta kappa s_bar / a^2");
    }
    return d;
}

/// The same constants written directly in square-root parameters.
inline DerivedConstants cir_direct_constants(const CIRParams& c, const UtilityParams& u,
                                             PotentialScaling scaling = PotentialScaling::Model) {
    const double dl = u.delta, sd = std::sqrt(dl);
    const double a2 = c.a * c.a;
    const double ks = c.kappa * c.s_bar;
    DerivedConstants d{};
    d.delta = dl;
    d.Lambda = 2.0 * sd * c.kappa / a2;
    d.lambda = -dl * ks / a2;
    d.Q = sd;
    if (scaling == PotentialScaling::Unscaled) {
        d.eta = std::sqrt((d.lambda + 0.5) * (d.lambda + 0.5) + dl * (1.0 - dl) * ks * ks / (a2 * a2 * a2 * a2));
        d.R = 2.0 * sd * ks / a2 * (dl + (1.0 - dl) / a2);
    } else {
        d.eta = std::sqrt((d.lambda + 0.5) * (d.lambda + 0.5) + dl * (1.0 - dl) * ks * ks / (a2 * a2));
        d.R = 2.0 * sd * ks / a2;
    }
    d.theta = 0.5 + d.eta - d.lambda;
    d.omega = 1.0 + 2.0 * d.eta;
    return d;
}

/// Optimal position for the square-root process, written in its own parameters:
///   X/S [ delta kappa (s_bar - S)/a^2 + Lambda S B + (lambda + eta + 1/2) W ]
/// with W the Whittaker ratio M_{lambda+1,eta}/M_{lambda,eta} at Lambda S A.
inline double cir_optimal_position(const PolicyInput& inp, const CIRParams& c, const UtilityParams& u,
                                   PotentialScaling scaling = PotentialScaling::Model) {
    inp.validate();
    const DerivedConstants d = cir_direct_constants(c, u, scaling);
    const double tau = std::max(0.25 * c.a * c.a * d.Lambda * (inp.T - inp.t), MCEVPolicy::kTauFloor);
    const TimeFunctions tf = time_functions(tau, d.Q);
    const double y = d.Lambda * inp.S * tf.A;
    const SignedLog up = whittaker_m_log(d.lambda + 1.0, d.eta, y);
    const SignedLog lo = whittaker_m_log(d.lambda, d.eta, y);
    const double w_ratio = up.sign * lo.sign * std::exp(up.log_abs - lo.log_abs);
    const double bracket = d.delta * c.kappa * (c.s_bar - inp.S) / (c.a * c.a) + d.Lambda * inp.S * tf.B +
                           (d.lambda + d.eta + 0.5) * w_ratio;
    return inp.X / inp.S * bracket;
}

}  // namespace mcev
