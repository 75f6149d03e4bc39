#pragma once

/// Closed-form small-cost asymptotics along lambda = c * eps^(-2/3): the
/// coefficients a1(c), a2(c), the cost-only and search-only benchmark
/// expansions, and a numerical sweep that compares the solver against them.

#include <cmath>
#include <cstddef>
#include <future>
#include <ostream>
#include <string>
#include <vector>

#include "illiq/grid.hpp"
#include "illiq/hjb_solver.hpp"
#include "illiq/io.hpp"
#include "illiq/model.hpp"

namespace illiq {

namespace detail {

inline void require_interior_merton(const ModelParams& p) {
    const double ym = merton_fraction(p);
    if (!(ym > 0.0 && ym < 1.0))
        throw ValidationError("asymptotics: Merton fraction must lie in (0,1), got " + std::to_string(ym));
}

// log(1 + K(c)) with K = 3 sqrt(2) c^{3/2} / (g s^3 y (1-y)), without overflow.
inline double log1p_K(const ModelParams& p, double c) {
    const double ym = merton_fraction(p);
    const double s = p.sigma;
    const double logK = std::log(3.0 * std::sqrt(2.0)) + 1.5 * std::log(c) -
                        std::log(p.gamma * s * s * s * ym * (1.0 - ym));
    if (logK > 0.0) return logK + std::log1p(std::exp(-logK));
    return std::log1p(std::exp(logK));
}

inline void require_c(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("asymptotics: c must be > 0");
}

}  // namespace detail

/// sqrt(c) * a1(c).
inline double sqrt_c_a1(const ModelParams& p, double c) {
    detail::require_interior_merton(p);
    detail::require_c(c);
    const double ym = merton_fraction(p);
    return p.sigma * ym * (1.0 - ym) / std::sqrt(2.0) * std::expm1(detail::log1p_K(p, c) / 3.0);
}

inline double a1(const ModelParams& p, double c) { return sqrt_c_a1(p, c) / std::sqrt(c); }

/// c * a2(c). Carries the sign of 1 - gamma.
inline double c_a2(const ModelParams& p, double c) {
    detail::require_interior_merton(p);
    detail::require_c(c);
    const double ym = merton_fraction(p);
    const double s2 = p.sigma * p.sigma;
    const double k = p.gamma * p.one_minus_gamma() * s2 * s2 * ym * ym * (1.0 - ym) * (1.0 - ym);
    return k / 4.0 * (std::exp(2.0 * detail::log1p_K(p, c) / 3.0) + 1.0);
}

inline double a2(const ModelParams& p, double c) {
    detail::require_interior_merton(p);
    detail::require_c(c);
    const double ym = merton_fraction(p);
    const double s2 = p.sigma * p.sigma;
    const double k = p.gamma * p.one_minus_gamma() * s2 * s2 * ym * ym * (1.0 - ym) * (1.0 - ym);
    // split the 1/c so large c does not overflow the power term
    return k / 4.0 * (std::exp(2.0 * detail::log1p_K(p, c) / 3.0 - std::log(c)) + 1.0 / c);
}

/// Limits of the coefficients at both ends of the curve.
struct BridgeLimits {
    double a1_inf;         // lim a1, c -> inf
    double a2_inf;         // lim a2, c -> inf
    double sqrt_c_a1_zero; // lim sqrt(c) a1, c -> 0
    double c_a2_zero;      // lim c a2, c -> 0
};

inline BridgeLimits bridge_limits(const ModelParams& p) {
    detail::require_interior_merton(p);
    const double ym = merton_fraction(p);
    const double s2 = p.sigma * p.sigma;
    const double base = std::cbrt(12.0 * ym * ym * (1.0 - ym) * (1.0 - ym) / p.gamma);
    BridgeLimits b;
    b.a1_inf = 0.5 * base;
    b.a2_inf = p.one_minus_gamma() * p.gamma * s2 / 8.0 * base * base;
    b.sqrt_c_a1_zero = 0.0;
    b.c_a2_zero = p.one_minus_gamma() * p.gamma * s2 * s2 * ym * ym * (1.0 - ym) * (1.0 - ym) / 2.0;
    return b;
}

/// Leading-order boundaries and value at y_M.
struct AsymptoticPrediction {
    double upper;
    double lower;
    double value;
};

/// Transaction costs only (lambda = inf).
inline AsymptoticPrediction benchmark_to(const ModelParams& p, double eps, double t) {
    if (!(eps > 0.0)) throw ValidationError("benchmark_to: eps must be > 0");
    const BridgeLimits b = bridge_limits(p);
    const double ym = merton_fraction(p);
    const double v0 = merton_value(p, t);
    const double h = b.a1_inf * std::cbrt(eps);
    return {ym + h, ym - h, v0 * (1.0 - b.a2_inf * (p.T - t) * std::pow(eps, 2.0 / 3.0))};
}

struct SearchOnlyPrediction {
    double target;
    double value;
};

/// Search frictions only (eps = 0).
inline SearchOnlyPrediction benchmark_so(const ModelParams& p, double lambda, double t) {
    if (!(lambda > 0.0)) throw ValidationError("benchmark_so: lambda must be > 0");
    const double ym = merton_fraction(p);
    const double s2 = p.sigma * p.sigma;
    const double v0 = merton_value(p, t);
    const double k = p.one_minus_gamma() * p.gamma * s2 * s2 * ym * ym * (1.0 - ym) * (1.0 - ym) / 2.0;
    return {ym + s2 * ym * (1.0 - ym) * (2.0 * ym - 1.0) / lambda, v0 * (1.0 - k * (p.T - t) / lambda)};
}

/// Joint expansion along lambda = c eps^(-2/3), in eps form.
inline AsymptoticPrediction joint_prediction(const ModelParams& p, double c, double eps, double t) {
    if (!(eps > 0.0)) throw ValidationError("joint_prediction: eps must be > 0");
    const double ym = merton_fraction(p);
    const double v0 = merton_value(p, t);
    const double h = a1(p, c) * std::cbrt(eps);
    return {ym + h, ym - h, v0 * (1.0 - a2(p, c) * (p.T - t) * std::pow(eps, 2.0 / 3.0))};
}

/// Same expansion in lambda form, with c = lambda eps^(2/3).
inline AsymptoticPrediction joint_prediction_lambda(const ModelParams& p, double lambda, double eps, double t) {
    if (!(eps > 0.0) || !(lambda > 0.0)) throw ValidationError("joint_prediction_lambda: eps, lambda must be > 0");
    const double c = lambda * std::pow(eps, 2.0 / 3.0);
    const double ym = merton_fraction(p);
    const double v0 = merton_value(p, t);
    const double h = sqrt_c_a1(p, c) / std::sqrt(lambda);
    return {ym + h, ym - h, v0 * (1.0 - c_a2(p, c) * (p.T - t) / lambda)};
}

struct SweepRecord {
    double eps = 0.0;
    double lambda = 0.0;
    double t = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double width = 0.0;              // upper - lower
    double value_decrease = 0.0;     // (v0(t) - v(t, y_M)) / (1 - g)
    double predicted_width = 0.0;    // 2 a1(c) eps^{1/3}
    double predicted_decrease = 0.0; // a2(c) v0(t) (T-t) eps^{2/3} / (1 - g)
    double raw_decrease = 0.0;       // v0(t) - v(t, y_M)
    double raw_predicted_decrease = 0.0;
    std::size_t n_z = 0;
    std::size_t n_t = 0;
    bool ok = false;
    std::string error;

    double width_ratio() const { return width / predicted_width; }
    double decrease_ratio() const { return value_decrease / predicted_decrease; }
};

struct SweepOptions {
    double z_min = -12.0;
    double z_max = 12.0;
    std::size_t n_z = 4000;
    double max_lambda_dt = 0.02;
    /// Cells of size dz * y_M(1-y_M) required across the predicted width.
    double min_cells_per_width = 32.0;
    bool parallel = true;
};

/// One sweep entry. The problem is autonomous in T - t, so the solve runs on
/// the horizon T - t and is read off at time 0.
inline SweepRecord sweep_point(const ModelParams& base, double c, double eps, double t, const SweepOptions& opt) {
    SweepRecord r;
    r.eps = eps;
    r.t = t;
    try {
        detail::require_interior_merton(base);
        detail::require_c(c);
        if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("sweep: eps must lie in (0,1)");
        if (!(t >= 0.0 && t < base.T)) throw ValidationError("sweep: t must lie in [0,T)");
        ModelParams p = base;
        p.eps_buy = p.eps_sell = eps;
        p.lambda = c * std::pow(eps, -2.0 / 3.0);
        p.T = base.T - t;
        p.validate();
        r.lambda = p.lambda;

        const double ym = merton_fraction(p);
        r.predicted_width = 2.0 * a1(p, c) * std::cbrt(eps);
        std::size_t n_z = opt.n_z;
        const double dz_need = r.predicted_width / (opt.min_cells_per_width * ym * (1.0 - ym));
        const double span = opt.z_max - opt.z_min;
        if (span / static_cast<double>(n_z - 1) > dz_need)
            n_z = static_cast<std::size_t>(std::ceil(span / dz_need)) + 1;
        r.n_z = n_z;

        SolverOptions so;
        so.n_t = 1;
        so.max_lambda_dt = opt.max_lambda_dt;
        so.max_stored_levels = 2;
        const Solution sol = solve(p, SpatialGrid(opt.z_min, opt.z_max, n_z), so);
        r.n_t = sol.n_t;
        const std::size_t K = sol.region.levels() - 1;
        r.lower = sol.region.lower[K];
        r.upper = sol.region.upper[K];
        r.width = r.upper - r.lower;

        const double v0 = merton_value(p, 0.0);
        const double v = sol.surface.value_at(0.0, ym);
        r.raw_decrease = v0 - v;
        r.raw_predicted_decrease = a2(p, c) * v0 * p.T * std::pow(eps, 2.0 / 3.0);
        r.value_decrease = r.raw_decrease / p.one_minus_gamma();
        r.predicted_decrease = r.raw_predicted_decrease / p.one_minus_gamma();
        r.ok = true;
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    return r;
}

/// Sweep along the curve; failures are recorded per entry, never thrown.
inline std::vector<SweepRecord> sweep(const ModelParams& params, double c, const std::vector<double>& eps_list,
                                      double t, const SweepOptions& opt = {}) {
    if (eps_list.empty()) throw ValidationError("sweep: eps_list is empty");
    std::vector<SweepRecord> out(eps_list.size());
    if (opt.parallel) {
        std::vector<std::future<SweepRecord>> jobs;
        for (double e : eps_list)
            jobs.push_back(std::async(std::launch::async, [&, e] { return sweep_point(params, c, e, t, opt); }));
        for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = jobs[i].get();
    } else {
        for (std::size_t i = 0; i < eps_list.size(); ++i) out[i] = sweep_point(params, c, eps_list[i], t, opt);
    }
    return out;
}

inline void write_fig2_csv(std::ostream& os, const std::vector<SweepRecord>& recs,
                           const std::vector<std::string>& header) {
    write_comment_header(os, header);
    os << "eps,lambda,width,predicted_width,decrease,predicted_decrease,raw_decrease,raw_predicted_decrease,status\n";
    for (const auto& r : recs) {
        os << fmt(r.eps) << ',' << fmt(r.lambda) << ',' << fmt(r.width) << ',' << fmt(r.predicted_width) << ','
           << fmt(r.value_decrease) << ',' << fmt(r.predicted_decrease) << ',' << fmt(r.raw_decrease) << ','
           << fmt(r.raw_predicted_decrease) << ',' << (r.ok ? std::string("ok") : csv_quote(r.error)) << '\n';
    }
}

/// Log-spaced c grid, inclusive of both ends.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0 && hi > lo) || n < 2) throw ValidationError("log_grid: need 0 < lo < hi and n >= 2");
    std::vector<double> c(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
        c[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    return c;
}

inline void write_fig3_csv(std::ostream& os, const ModelParams& p, const std::vector<double>& cs,
                           const std::vector<std::string>& header) {
    write_comment_header(os, header);
    os << "c,a1,a2,sqrt_c_a1,c_a2\n";
    for (double c : cs)
        os << fmt(c) << ',' << fmt(a1(p, c)) << ',' << fmt(a2(p, c)) << ',' << fmt(sqrt_c_a1(p, c)) << ','
           << fmt(c_a2(p, c)) << '\n';
}

}  // namespace illiq
