#pragma once

// Speed/accuracy harness for the ratio kernel.  Not thread-safe: run it on one
// thread, nothing else busy.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "mcev/errors.hpp"
#include "mcev/specialfn.hpp"

namespace mcev {

enum class BenchMethod { SmallX, LargeX, ContinuedFraction, DirectQuotient, Dispatcher, NaiveDirect };

inline std::string to_string(BenchMethod m) {
    switch (m) {
        case BenchMethod::SmallX: return "small_x_series";
        case BenchMethod::LargeX: return "large_x_series";
        case BenchMethod::ContinuedFraction: return "continued_fraction";
        case BenchMethod::DirectQuotient: return "direct_quotient";
        case BenchMethod::Dispatcher: return "dispatcher";
        case BenchMethod::NaiveDirect: return "naive_direct";
    }
    return "unknown";
}

inline BenchMethod parse_bench_method(const std::string& s) {
    for (auto m : {BenchMethod::SmallX, BenchMethod::LargeX, BenchMethod::ContinuedFraction,
                   BenchMethod::DirectQuotient, BenchMethod::Dispatcher, BenchMethod::NaiveDirect}) {
        if (to_string(m) == s) return m;
    }
    throw DomainError("unknown bench method '" + s + "'");
}

struct BenchConfig {
    std::vector<double> x_grid;  // used with bench_grid() when no explicit point list is given
    int reps = 10000;
    int batch = 20;
    double tol = 1e-10;
    std::vector<BenchMethod> methods = {BenchMethod::SmallX,         BenchMethod::LargeX,
                                        BenchMethod::ContinuedFraction, BenchMethod::DirectQuotient,
                                        BenchMethod::Dispatcher,     BenchMethod::NaiveDirect};

    void validate() const {
        if (reps < 1) throw DomainError("bench: reps must be >= 1");
        if (batch < 1) throw DomainError("bench: batch must be >= 1");
        if (!(tol > 0.0)) throw DomainError("bench: tol must be > 0");
    }
};

struct OracleEntry {
    double theta, omega, x, value;
};

class OracleTable {
public:
    void add(const OracleEntry& e) { map_[{e.theta, e.omega, e.x}] = e.value; }

    std::optional<double> find(double theta, double omega, double x) const {
        auto it = map_.find({theta, omega, x});
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }

    std::vector<OracleEntry> entries() const {
        std::vector<OracleEntry> out;
        for (const auto& [k, v] : map_) out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), v});
        return out;
    }

    std::size_t size() const { return map_.size(); }

private:
    std::map<std::tuple<double, double, double>, double> map_;
};

/// Reads "theta,omega,x[,value]" rows.  Points go to `points`; rows with a
/// value also go to the returned oracle table.
inline OracleTable load_grid_csv(const std::string& path, std::vector<RatioParams>* points = nullptr) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DomainError(path + ": empty file");
    OracleTable table;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> f;
        while (std::getline(ss, cell, ',')) {
            try {
                f.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw DomainError(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (f.size() < 3) throw DomainError(path + ":" + std::to_string(lineno) + ": expected theta,omega,x[,value]");
        if (points) points->push_back({f[0], f[1], f[2]});
        if (f.size() >= 4) table.add({f[0], f[1], f[2], f[3]});
    }
    return table;
}

struct BenchRow {
    std::string method;
    double theta = 0, omega = 0, x = 0;
    double median_ns = NAN;
    double p90_ns = NAN;
    double rel_err = NAN;  // vs oracle; NaN when the oracle has no entry
    int failures = 0;
    std::string note;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    double baseline_ns = 0.0;  // per-call harness overhead that was subtracted
};

namespace detail {

inline double evaluate_method(BenchMethod m, const RatioParams& p, double tol) {
    switch (m) {
        case BenchMethod::SmallX: return ratio_small_x(p, tol).value;
        case BenchMethod::LargeX: return ratio_large_x(p, tol).value;
        case BenchMethod::ContinuedFraction: return ratio_continued_fraction(p, tol).value;
        case BenchMethod::DirectQuotient: return ratio_direct_quotient(p, tol).value;
        case BenchMethod::Dispatcher: {
            RatioConfig cfg;
            cfg.tol = tol;
            return ratio(p, cfg).value;
        }
        case BenchMethod::NaiveDirect: return ratio_direct_naive(p);
    }
    return NAN;
}

inline double noop(const RatioParams& p, double) { return p.x; }

template <class F>
std::vector<double> time_batches(F&& f, const RatioParams& p, double tol, int reps, int batch) {
    using clock = std::chrono::steady_clock;
    volatile double sink = 0.0;
    const int n_batches = std::max(1, reps / batch);
    for (int i = 0; i < batch; ++i) sink = sink + f(p, tol);  // warmup
    std::vector<double> per_call;
    per_call.reserve(static_cast<std::size_t>(n_batches));
    for (int b = 0; b < n_batches; ++b) {
        const auto t0 = clock::now();
        for (int i = 0; i < batch; ++i) sink = sink + f(p, tol);
        const auto t1 = clock::now();
        per_call.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() / batch);
    }
    std::sort(per_call.begin(), per_call.end());
    return per_call;
}

inline double pct(const std::vector<double>& sorted, double p) {
    const auto idx = static_cast<std::size_t>(std::clamp(p * (static_cast<double>(sorted.size()) - 1.0), 0.0,
                                                         static_cast<double>(sorted.size()) - 1.0));
    return sorted[idx];
}

}  // namespace detail

/// Cartesian grid of (theta, omega) pairs with cfg.x_grid.
inline std::vector<RatioParams> bench_grid(const std::vector<std::pair<double, double>>& params, const BenchConfig& cfg) {
    std::vector<RatioParams> out;
    for (const auto& [t, o] : params) {
        for (double x : cfg.x_grid) out.push_back({t, o, x});
    }
    return out;
}

inline BenchReport run_bench(const BenchConfig& cfg, const std::vector<RatioParams>& points, const OracleTable& oracle) {
    cfg.validate();
    BenchReport rep;
    {
        const auto base = detail::time_batches(detail::noop, RatioParams{1.0, 1.0, 1.0}, cfg.tol, cfg.reps, cfg.batch);
        rep.baseline_ns = detail::pct(base, 0.5);
    }
    for (const auto& p : points) {
        const auto ref = oracle.find(p.theta, p.omega, p.x);
        for (BenchMethod m : cfg.methods) {
            BenchRow row;
            row.method = to_string(m);
            row.theta = p.theta;
            row.omega = p.omega;
            row.x = p.x;
            if (!ref) row.note = "no oracle entry";
            double v = NAN;
            try {
                v = detail::evaluate_method(m, p, cfg.tol);
            } catch (const ConvergenceError& e) {
                row.failures = 1;
                row.note = e.what();
            } catch (const std::exception& e) {
                row.failures = 1;
                row.note = e.what();
            }
            if (row.failures == 0 && !std::isfinite(v)) {
                row.failures = 1;
                row.note = "overflow (non-finite result)";
            }
            if (row.failures == 0) {
                if (ref) row.rel_err = *ref == 0.0 ? std::abs(v) : std::abs(v - *ref) / std::abs(*ref);
                const auto t = detail::time_batches(
                    [m](const RatioParams& q, double tol) { return detail::evaluate_method(m, q, tol); }, p, cfg.tol,
                    cfg.reps, cfg.batch);
                row.median_ns = std::max(0.0, detail::pct(t, 0.5) - rep.baseline_ns);
                row.p90_ns = std::max(0.0, detail::pct(t, 0.9) - rep.baseline_ns);
            }
            rep.rows.push_back(std::move(row));
        }
    }
    return rep;
}

inline void write_bench_csv(std::ostream& os, const BenchReport& r) {
    os.precision(10);
    os << "method,theta,omega,x,median_ns,p90_ns,rel_err,failures\n";
    for (const auto& row : r.rows) {
        os << row.method << ',' << row.theta << ',' << row.omega << ',' << row.x << ',' << row.median_ns << ','
           << row.p90_ns << ',' << row.rel_err << ',' << row.failures << '\n';
    }
}

}  // namespace mcev
