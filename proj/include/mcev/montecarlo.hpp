#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mcev/errors.hpp"
#include "mcev/model.hpp"
#include "mcev/policy.hpp"

namespace mcev {

enum class Scheme { Euler, Milstein };

inline Scheme parse_scheme(const std::string& s) {
    if (s == "euler") return Scheme::Euler;
    if (s == "milstein") return Scheme::Milstein;
    throw DomainError("unknown scheme '" + s + "' (expected euler or milstein)");
}

struct SimConfig {
    int n_paths = 10000;
    int n_steps = 252;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::Euler;
    int n_threads = 0;  // 0: hardware concurrency
    std::size_t max_cells = 200'000'000;
    // normals summed per step; n_steps = N with substeps = 2 follows the same
    // Brownian path as n_steps = 2N with substeps = 1
    int substeps = 1;

    void validate() const {
        if (n_paths < 1) throw DomainError("SimConfig: n_paths must be >= 1");
        if (n_steps < 1) throw DomainError("SimConfig: n_steps must be >= 1");
        if (substeps < 1) throw DomainError("SimConfig: substeps must be >= 1");
        const double cells = static_cast<double>(n_paths) * (static_cast<double>(n_steps) + 1.0);
        if (cells > static_cast<double>(max_cells)) {
            throw DomainError("SimConfig: n_paths * (n_steps + 1) exceeds the memory budget");
        }
    }
};

struct PathSet {
    std::vector<double> times;
    std::vector<double> values;  // row-major, n_paths x (n_steps + 1)
    std::vector<char> absorbed;
    std::vector<std::string> warnings;
    int n_paths = 0;
    int n_steps = 0;

    double at(int path, int step) const {
        return values[static_cast<std::size_t>(path) * static_cast<std::size_t>(n_steps + 1) +
                      static_cast<std::size_t>(step)];
    }
    double& at(int path, int step) {
        return values[static_cast<std::size_t>(path) * static_cast<std::size_t>(n_steps + 1) +
                      static_cast<std::size_t>(step)];
    }
    double terminal(int path) const { return at(path, n_steps); }
    double dt() const { return times.back() / n_steps; }
};

struct StrategySpec {
    enum class Kind { BondOnly, AssetOnly, OptimalPolicy, ConstantFraction };
    Kind kind = Kind::OptimalPolicy;
    double fraction = 0.0;

    static StrategySpec bond_only() { return {Kind::BondOnly, 0.0}; }
    static StrategySpec asset_only() { return {Kind::AssetOnly, 1.0}; }
    static StrategySpec optimal() { return {Kind::OptimalPolicy, 0.0}; }
    static StrategySpec constant_fraction(double f) {
        if (!std::isfinite(f)) throw DomainError("constant fraction must be finite");
        return {Kind::ConstantFraction, f};
    }
};

struct WealthPath {
    std::vector<double> times;
    std::vector<double> wealth;
    std::vector<double> positions;  // units held over [t_k, t_{k+1})
    bool flagged = false;           // wealth left (0, inf): excluded from statistics
    bool leverage_capped = false;
};

struct TerminalStats {
    double mean = 0.0;
    double std = 0.0;
    std::map<double, double> quantiles;
    double certainty_equivalent = 0.0;
    double mean_utility = 0.0;
    double utility_stderr = 0.0;
    int n_used = 0;
    int n_excluded = 0;
};

inline constexpr double kLeverageCap = 1e6;
inline constexpr std::array<double, 5> kQuantileLevels = {0.01, 0.05, 0.5, 0.95, 0.99};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream per (seed, path); results do not depend on scheduling.
inline std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t path) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(path + 0x632be59bd9b4e019ULL)));
}

inline int thread_count(int requested, int work) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    return std::clamp(n, 1, std::max(1, work));
}

// Runs body(i) for i in [0, n) over contiguous chunks; the first exception wins.
inline void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    const int nt = thread_count(threads, n);
    if (nt == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nt));
    std::vector<std::thread> pool;
    for (int w = 0; w < nt; ++w) {
        const int lo = static_cast<int>(static_cast<long long>(n) * w / nt);
        const int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / nt);
        pool.emplace_back([&, w, lo, hi] {
            try {
                for (int i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// Brownian increment over one step of length dt.
template <class Engine>
double brownian_step(Engine& eng, std::normal_distribution<double>& normal, double dt, int substeps) {
    if (substeps == 1) return std::sqrt(dt) * normal(eng);
    double z = 0.0;
    for (int j = 0; j < substeps; ++j) z += normal(eng);
    return std::sqrt(dt / substeps) * z;
}

inline PathSet make_pathset(double S0, double T, const SimConfig& cfg) {
    cfg.validate();
    if (!(S0 > 0.0)) throw DomainError("simulation requires S0 > 0");
    if (!(T > 0.0)) throw DomainError("simulation requires T > 0");
    PathSet ps;
    ps.n_paths = cfg.n_paths;
    ps.n_steps = cfg.n_steps;
    ps.times.resize(static_cast<std::size_t>(cfg.n_steps) + 1);
    for (int k = 0; k <= cfg.n_steps; ++k) ps.times[static_cast<std::size_t>(k)] = T * k / cfg.n_steps;
    ps.values.assign(static_cast<std::size_t>(cfg.n_paths) * (static_cast<std::size_t>(cfg.n_steps) + 1), 0.0);
    ps.absorbed.assign(static_cast<std::size_t>(cfg.n_paths), 0);
    return ps;
}

}  // namespace detail

/// Discretized M-CEV paths; a path reaching S <= 0 is absorbed at 0 (default).
inline PathSet simulate_mcev(const MCEVParams& m, double S0, double T, const SimConfig& cfg) {
    m.validate();
    PathSet ps = detail::make_pathset(S0, T, cfg);
    const double dt = T / cfg.n_steps;
    const double local_var = m.a * m.a * std::pow(S0, 2.0 * m.beta);
    if (cfg.n_steps < 50.0 * T * local_var) {
        ps.warnings.push_back("n_steps = " + std::to_string(cfg.n_steps) +
                              " is small relative to the local variance; expect discretization bias");
    }
    const bool milstein = cfg.scheme == Scheme::Milstein;
    detail::parallel_for(cfg.n_paths, cfg.n_threads, [&](int i) {
        auto eng = detail::path_engine(cfg.seed, static_cast<std::uint64_t>(i));
        std::normal_distribution<double> normal(0.0, 1.0);
        double S = S0;
        ps.at(i, 0) = S;
        bool dead = false;
        for (int k = 0; k < cfg.n_steps; ++k) {
            const double dW = detail::brownian_step(eng, normal, dt, cfg.substeps);
            if (!dead) {
                const double s2b = std::pow(S, 2.0 * m.beta);
                double next = S + S * (m.alpha + m.c * m.a * m.a * s2b) * dt + m.a * S * std::pow(S, m.beta) * dW;
                if (milstein) next += 0.5 * m.a * m.a * (m.beta + 1.0) * s2b * S * (dW * dW - dt);
                if (!(next > 0.0) || !std::isfinite(next)) {
                    dead = true;
                    next = 0.0;
                }
                S = next;
            }
            ps.at(i, k + 1) = dead ? 0.0 : S;
        }
        ps.absorbed[static_cast<std::size_t>(i)] = dead ? 1 : 0;
    });
    return ps;
}

/// Square-root process paths by full-truncation Euler (or Milstein); the stored
/// value is max(state, 0).
inline PathSet simulate_cir(const CIRParams& c, double S0, double T, const SimConfig& cfg) {
    PathSet ps = detail::make_pathset(S0, T, cfg);
    const double dt = T / cfg.n_steps;
    if (cfg.n_steps < 50.0 * T * std::max(c.kappa, c.a * c.a / S0)) {
        ps.warnings.push_back("n_steps = " + std::to_string(cfg.n_steps) +
                              " is small relative to kappa and a^2/S0; expect discretization bias");
    }
    const bool milstein = cfg.scheme == Scheme::Milstein;
    detail::parallel_for(cfg.n_paths, cfg.n_threads, [&](int i) {
        auto eng = detail::path_engine(cfg.seed, static_cast<std::uint64_t>(i));
        std::normal_distribution<double> normal(0.0, 1.0);
        double x = S0;
        ps.at(i, 0) = S0;
        for (int k = 0; k < cfg.n_steps; ++k) {
            const double dW = detail::brownian_step(eng, normal, dt, cfg.substeps);
            const double xp = std::max(x, 0.0);
            x = x + c.kappa * (c.s_bar - xp) * dt + c.a * std::sqrt(xp) * dW;
            if (milstein) x += 0.25 * c.a * c.a * (dW * dW - dt);
            ps.at(i, k + 1) = std::max(x, 0.0);
        }
    });
    return ps;
}

/// Self-financing wealth X_{k+1} = X_k + r (X_k - pi_k S_k) dt + pi_k (S_{k+1} - S_k)
/// along every path, rebalanced on the simulation grid.
inline std::vector<WealthPath> run_strategy(const PathSet& paths, const StrategySpec& s, const MCEVParams& m,
                                            const UtilityParams& u, double X0, double T, int n_threads = 0) {
    if (!(X0 > 0.0)) throw DomainError("run_strategy requires X0 > 0");
    if (!(T > 0.0)) throw DomainError("run_strategy requires T > 0");
    if (s.kind == StrategySpec::Kind::ConstantFraction && !std::isfinite(s.fraction)) {
        throw DomainError("constant fraction must be finite");
    }
    std::optional<MCEVPolicy> policy;
    if (s.kind == StrategySpec::Kind::OptimalPolicy) policy.emplace(m, u);

    std::vector<WealthPath> out(static_cast<std::size_t>(paths.n_paths));
    const int n = paths.n_steps;
    detail::parallel_for(paths.n_paths, n_threads, [&](int i) {
        WealthPath& w = out[static_cast<std::size_t>(i)];
        w.times = paths.times;
        w.wealth.assign(static_cast<std::size_t>(n) + 1, 0.0);
        w.positions.assign(static_cast<std::size_t>(n) + 1, 0.0);
        double X = X0;
        w.wealth[0] = X;
        for (int k = 0; k < n; ++k) {
            const double S = paths.at(i, k), S1 = paths.at(i, k + 1);
            const double t = paths.times[static_cast<std::size_t>(k)];
            const double dt = paths.times[static_cast<std::size_t>(k) + 1] - t;
            double pi = 0.0;
            if (!w.flagged && S > 0.0) {
                switch (s.kind) {
                    case StrategySpec::Kind::BondOnly: pi = 0.0; break;
                    case StrategySpec::Kind::AssetOnly: pi = X / S; break;
                    case StrategySpec::Kind::ConstantFraction: pi = s.fraction * X / S; break;
                    case StrategySpec::Kind::OptimalPolicy: pi = policy->position({X, S, t, T}); break;
                }
                const double cap = kLeverageCap * X / S;
                if (std::abs(pi) > cap) {
                    pi = std::copysign(cap, pi);
                    w.leverage_capped = true;
                }
            }
            w.positions[static_cast<std::size_t>(k)] = pi;
            if (!w.flagged) {
                X = X + m.r * (X - pi * S) * dt + pi * (S1 - S);
                if (!(X > 0.0) || !std::isfinite(X)) w.flagged = true;
            }
            w.wealth[static_cast<std::size_t>(k) + 1] = X;
        }
    });
    return out;
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw DomainError("quantile of empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline TerminalStats terminal_stats(const std::vector<double>& terminal, const UtilityParams& u, int excluded = 0) {
    if (terminal.empty()) throw DomainError("terminal_stats: no usable paths");
    TerminalStats st;
    st.n_used = static_cast<int>(terminal.size());
    st.n_excluded = excluded;
    const double n = static_cast<double>(terminal.size());
    double sum = 0.0, usum = 0.0;
    for (double x : terminal) {
        sum += x;
        usum += u.utility(x);
    }
    st.mean = sum / n;
    st.mean_utility = usum / n;
    double ss = 0.0, us = 0.0;
    for (double x : terminal) {
        ss += (x - st.mean) * (x - st.mean);
        const double du = u.utility(x) - st.mean_utility;
        us += du * du;
    }
    st.std = terminal.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    st.utility_stderr = terminal.size() > 1 ? std::sqrt(us / (n - 1.0) / n) : 0.0;
    std::vector<double> sorted = terminal;
    std::sort(sorted.begin(), sorted.end());
    for (double p : kQuantileLevels) st.quantiles[p] = quantile_sorted(sorted, p);
    // Exact for a constant sample, where the power round trip would drift.
    st.certainty_equivalent =
        sorted.front() == sorted.back() ? sorted.front() : std::pow(u.gamma * st.mean_utility, 1.0 / u.gamma);
    return st;
}

inline TerminalStats terminal_stats(const std::vector<WealthPath>& wealths, const UtilityParams& u) {
    std::vector<double> terminal;
    terminal.reserve(wealths.size());
    int excluded = 0;
    for (const auto& w : wealths) {
        if (w.flagged || w.wealth.empty()) {
            ++excluded;
            continue;
        }
        terminal.push_back(w.wealth.back());
    }
    return terminal_stats(terminal, u, excluded);
}

struct MisspecResult {
    TerminalStats assumed;  // trader using the assumed parameters
    TerminalStats truth;    // trader using the true parameters, same paths
    double utility_loss = 0.0;         // mean U(truth) - mean U(assumed), paths usable by both
    double utility_loss_stderr = 0.0;  // paired standard error
};

/// Simulates under true_m and trades under the policy built from assumed_m,
/// alongside the true-parameter trader on the same paths.
inline MisspecResult misspecification_study(const MCEVParams& true_m, const MCEVParams& assumed_m,
                                            const UtilityParams& u, double S0, double X0, double T,
                                            const SimConfig& cfg) {
    const PathSet paths = simulate_mcev(true_m, S0, T, cfg);
    const auto wa = run_strategy(paths, StrategySpec::optimal(), assumed_m, u, X0, T, cfg.n_threads);
    const auto wt = run_strategy(paths, StrategySpec::optimal(), true_m, u, X0, T, cfg.n_threads);
    MisspecResult res;
    res.assumed = terminal_stats(wa, u);
    res.truth = terminal_stats(wt, u);
    std::vector<double> diff;
    for (std::size_t i = 0; i < wa.size(); ++i) {
        if (wa[i].flagged || wt[i].flagged) continue;
        diff.push_back(u.utility(wt[i].wealth.back()) - u.utility(wa[i].wealth.back()));
    }
    if (!diff.empty()) {
        double s = 0.0;
        for (double d : diff) s += d;
        const double n = static_cast<double>(diff.size());
        res.utility_loss = s / n;
        double ss = 0.0;
        for (double d : diff) ss += (d - res.utility_loss) * (d - res.utility_loss);
        res.utility_loss_stderr = diff.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    }
    return res;
}

/// Long CSV: path_id,t,S,X,pi
inline void write_paths_csv(std::ostream& os, const PathSet& paths, const std::vector<WealthPath>& wealth) {
    os.precision(17);
    os << "path_id,t,S,X,pi\n";
    for (int i = 0; i < paths.n_paths; ++i) {
        const WealthPath* w = wealth.empty() ? nullptr : &wealth[static_cast<std::size_t>(i)];
        for (int k = 0; k <= paths.n_steps; ++k) {
            os << i << ',' << paths.times[static_cast<std::size_t>(k)] << ',' << paths.at(i, k) << ',';
            if (w) {
                os << w->wealth[static_cast<std::size_t>(k)] << ',' << w->positions[static_cast<std::size_t>(k)];
            } else {
                os << ',';
            }
            os << '\n';
        }
    }
}

}  // namespace mcev
