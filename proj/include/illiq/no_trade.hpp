#pragma once

/// No-trade boundaries from a value slice and the threshold times at which
/// they flatten onto 0 and 1 near the horizon.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "illiq/grid.hpp"
#include "illiq/io.hpp"
#include "illiq/model.hpp"

namespace illiq {

struct Boundaries {
    double lower = 0.0;
    double upper = 1.0;
    // node index of the raw grid argmax of each transformed objective
    std::size_t lower_argmax = 0;
    std::size_t upper_argmax = 0;
};

namespace detail {

// Throws if the discrete objective rises again after it started to fall.
inline void check_single_peaked(std::span<const double> obj, const char* which) {
    double scale = 0.0;
    for (double o : obj) scale = std::max(scale, std::abs(o));
    const double tol = 1e-13 * scale;
    bool falling = false;
    for (std::size_t i = 0; i + 1 < obj.size(); ++i) {
        const double d = obj[i + 1] - obj[i];
        if (d < -tol) falling = true;
        else if (d > tol && falling)
            throw NumericalError(std::string("no_trade: transformed map for ") + which +
                                 " boundary is not single-peaked (concavity violation) near node " +
                                 std::to_string(i));
    }
}

template <class Residual>
double bisect_root(Residual&& r, double lo, double hi) {
    // r(lo) > 0 >= r(hi)
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (r(mid) > 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// FOC residual of the buy boundary: v_x/(1-g) - eps_buy v/(1 + eps_buy y).
inline double lower_foc_residual(const SliceView& s, const ModelParams& p, double y) {
    return s.dx(y) / p.one_minus_gamma() - p.eps_buy * s.value(y) / (1.0 + p.eps_buy * y);
}

/// FOC residual of the sell boundary: v_x/(1-g) + eps_sell v/(1 - eps_sell y).
inline double upper_foc_residual(const SliceView& s, const ModelParams& p, double y) {
    return s.dx(y) / p.one_minus_gamma() + p.eps_sell * s.value(y) / (1.0 - p.eps_sell * y);
}

/// Argmax boundaries of v/((1-g)(1+eps_buy y)^(1-g)) and v/((1-g)(1-eps_sell y)^(1-g)),
/// refined from the grid argmax to the first-order condition by bisection.
inline Boundaries extract_boundaries(const SliceView& s, const ModelParams& p) {
    const auto& g = s.grid();
    const std::size_t N = g.size();
    const double omg = p.one_minus_gamma();

    Boundaries b;
    std::vector<double> obj(N);

    auto refine = [&](auto&& residual_node, auto&& residual, double endpoint_lo_tol,
                      double endpoint_hi_tol) {
        // first + -> - crossing of the nodal residual
        if (residual_node(0) <= endpoint_lo_tol) return 0.0;
        if (residual_node(N - 1) >= endpoint_hi_tol) return 1.0;
        std::size_t i = 0;
        while (i + 1 < N && residual_node(i + 1) > 0.0) ++i;
        if (i + 1 >= N) return 1.0;
        return detail::bisect_root(residual, g.x(i), g.x(i + 1));
    };

    // buy side
    for (std::size_t i = 0; i < N; ++i)
        obj[i] = s[i] / (omg * std::pow(1.0 + p.eps_buy * g.x(i), omg));
    detail::check_single_peaked(obj, "lower");
    b.lower_argmax = static_cast<std::size_t>(std::max_element(obj.begin(), obj.end()) - obj.begin());
    {
        auto rn = [&](std::size_t i) {
            return s.dx_node(i) / omg - p.eps_buy * s[i] / (1.0 + p.eps_buy * g.x(i));
        };
        auto r = [&](double y) { return lower_foc_residual(s, p, y); };
        b.lower = refine(rn, r, 1e-10, 0.0);
    }

    // sell side
    for (std::size_t i = 0; i < N; ++i)
        obj[i] = s[i] / (omg * std::pow(1.0 - p.eps_sell * g.x(i), omg));
    detail::check_single_peaked(obj, "upper");
    b.upper_argmax = static_cast<std::size_t>(std::max_element(obj.begin(), obj.end()) - obj.begin());
    {
        auto rn = [&](std::size_t i) {
            return s.dx_node(i) / omg + p.eps_sell * s[i] / (1.0 - p.eps_sell * g.x(i));
        };
        auto r = [&](double y) { return upper_foc_residual(s, p, y); };
        b.upper = refine(rn, r, 0.0, -1e-10);
    }

    if (b.lower > b.upper)
        throw NumericalError("no_trade: degenerate region, lower boundary " + std::to_string(b.lower) +
                             " exceeds upper boundary " + std::to_string(b.upper));
    return b;
}

/// Boundaries y_lower(t), y_upper(t) on every solver time level (t decreasing
/// from T), the value at each boundary, and the threshold times.
struct NoTradeRegion {
    std::vector<double> times;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> v_lower;  // v(t, y_lower(t))
    std::vector<double> v_upper;  // v(t, y_upper(t))
    double t_lower = 0.0;
    double t_upper = 0.0;

    std::size_t levels() const { return times.size(); }

    void push(double t, const Boundaries& b, const SliceView& s) {
        times.push_back(t);
        lower.push_back(b.lower);
        upper.push_back(b.upper);
        v_lower.push_back(s.value(b.lower));
        v_upper.push_back(s.value(b.upper));
    }

    /// Level index with the nearest time <= t (the "nearest earlier" level).
    std::size_t level_at_or_before(double t) const {
        if (times.empty()) throw ValidationError("NoTradeRegion: empty");
        // times decreasing: first index whose time is <= t
        const double tol = 1e-12 * std::abs(times.front());
        auto it = std::lower_bound(times.begin(), times.end(), t + tol, std::greater<double>());
        if (it == times.end()) return times.size() - 1;
        return static_cast<std::size_t>(it - times.begin());
    }

    /// Index of the level whose time equals t within half a step.
    std::size_t level_near(double t) const {
        std::size_t best = 0;
        for (std::size_t k = 1; k < times.size(); ++k)
            if (std::abs(times[k] - t) < std::abs(times[best] - t)) best = k;
        return best;
    }
};

struct ThresholdTimes {
    double t_lower = 0.0;           // direct estimate
    double t_upper = 0.0;           // direct estimate
    double t_lower_integral = 0.0;  // from the threshold integral equation
    double t_upper_integral = 0.0;
};

namespace detail {

// Earliest level time from which the boundary equals `target` up to T.
inline double direct_threshold(const NoTradeRegion& r, const std::vector<double>& y, double target) {
    double t = r.times.front();
    for (std::size_t k = 0; k < r.levels(); ++k) {
        if (y[k] != target) return t;
        t = r.times[k];
    }
    return 0.0;
}

// Root in [0, T] of F(tau) = sum of trapezoid panels on [tau, T] minus rhs,
// where cum[k] holds the integral from times[k] to T. Returns 0 if none.
inline double integral_root(const NoTradeRegion& r, const std::vector<double>& cum, double rhs) {
    const std::size_t K = r.levels();
    for (std::size_t k = 1; k < K; ++k) {
        if (cum[k] >= rhs) {
            // bisection on the piecewise-linear interpolant inside [t_k, t_{k-1}]
            double lo = r.times[k], hi = r.times[k - 1];
            auto F = [&](double tau) {
                const double w = (r.times[k - 1] - tau) / (r.times[k - 1] - r.times[k]);
                return (1.0 - w) * cum[k - 1] + w * cum[k] - rhs;
            };
            for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (F(mid) >= 0.0) lo = mid;
                else hi = mid;
            }
            return 0.5 * (lo + hi);
        }
    }
    return 0.0;
}

}  // namespace detail

/// Threshold times from the extracted region, two ways: directly from where
/// the boundaries sit on 0 / 1, and from the threshold integral equations
/// evaluated with the trapezoid rule on the solver's time levels.
inline ThresholdTimes threshold_times(const ModelParams& p, const NoTradeRegion& r) {
    ThresholdTimes out;
    out.t_lower = detail::direct_threshold(r, r.lower, 0.0);
    out.t_upper = detail::direct_threshold(r, r.upper, 1.0);

    const std::size_t K = r.levels();
    const double lam = p.lambda, mu = p.mu, g = p.gamma, sig2 = p.sigma * p.sigma;
    const double omg = p.one_minus_gamma();

    // lower: eps e^{mu T} = mu (1+eps) int_tau^T e^{mu s} G(s) ds,
    // G(s) = e^{-lam (T-s)} + lam int_s^T e^{-lam (u-s)} v(u,y)/(1+eps y)^{1-g} du
    {
        const double eb = p.eps_buy;
        std::vector<double> gfun(K), cum(K, 0.0);
        for (std::size_t k = 0; k < K; ++k)
            gfun[k] = r.v_lower[k] / std::pow(1.0 + eb * r.lower[k], omg);
        double G_prev = 1.0, f_prev = mu * (1.0 + eb) * std::exp(mu * r.times[0]) * G_prev;
        for (std::size_t k = 1; k < K; ++k) {
            const double h = r.times[k - 1] - r.times[k];
            const double d = std::exp(-lam * h);
            const double G = d * G_prev + lam * 0.5 * h * (gfun[k] + d * gfun[k - 1]);
            const double f = mu * (1.0 + eb) * std::exp(mu * r.times[k]) * G;
            cum[k] = cum[k - 1] + 0.5 * h * (f + f_prev);
            G_prev = G;
            f_prev = f;
        }
        out.t_lower_integral = detail::integral_root(r, cum, eb * std::exp(mu * p.T));
    }

    // upper: eps = (g s^2 - mu) int_tau^T e^{kappa (T-s)} H(s) ds,
    // H(s) = e^{-beta (T-s)} + lam int_s^T e^{-beta (u-s)} v(u,y)((1-eps)/(1-eps y))^{1-g} du
    {
        const double es = p.eps_sell;
        const double beta = lam - omg * mu + g * omg * sig2 / 2.0;
        const double kappa = g * mu - g * (1.0 + g) * sig2 / 2.0;
        std::vector<double> hfun(K), cum(K, 0.0);
        for (std::size_t k = 0; k < K; ++k)
            hfun[k] = r.v_upper[k] * std::pow((1.0 - es) / (1.0 - es * r.upper[k]), omg);
        const double a = g * sig2 - mu;
        double H_prev = 1.0, f_prev = a * std::exp(kappa * (p.T - r.times[0])) * H_prev;
        for (std::size_t k = 1; k < K; ++k) {
            const double h = r.times[k - 1] - r.times[k];
            const double d = std::exp(-beta * h);
            const double H = d * H_prev + lam * 0.5 * h * (hfun[k] + d * hfun[k - 1]);
            const double f = a * std::exp(kappa * (p.T - r.times[k])) * H;
            cum[k] = cum[k - 1] + 0.5 * h * (f + f_prev);
            H_prev = H;
            f_prev = f;
        }
        out.t_upper_integral = detail::integral_root(r, cum, es);
    }
    return out;
}

/// Region as CSV: t, y_lower, y_upper, one row per solver level (t decreasing).
inline void write_region_csv(std::ostream& os, const NoTradeRegion& r, const std::vector<std::string>& header) {
    write_comment_header(os, header);
    os << "t,y_lower,y_upper\n";
    for (std::size_t k = 0; k < r.levels(); ++k)
        os << fmt(r.times[k]) << ',' << fmt(r.lower[k]) << ',' << fmt(r.upper[k]) << '\n';
}

}  // namespace illiq
