#pragma once

/// Independent evaluation of v and v_x by quadrature over the explicit
/// processes
///   A = exp((mu - s^2/2) d + s B_d),  Y = x A / (x A + 1 - x),  Z = ((1-x)/(1-Y))^(1-g),
/// using
///   v(t,x) = e^{-lam tau} E[Z_T] + int_0^{lam tau} e^{-u} E[Z_s L(s, Y_s)] du,  s = t + u/lam.
/// Expectations over Y are integrals against a Gaussian in w = logit(Y).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "illiq/grid.hpp"
#include "illiq/hjb_solver.hpp"
#include "illiq/io.hpp"
#include "illiq/model.hpp"
#include "illiq/rng.hpp"

namespace illiq {

/// Density of Y_{t+dt} started from x, as a density in y.
inline double density(const ModelParams& p, double y, double dt, double x) {
    if (!(y > 0.0 && y < 1.0 && x > 0.0 && x < 1.0)) throw ValidationError("density: x, y must lie in (0,1)");
    if (!(dt > 0.0)) throw ValidationError("density: dt must be > 0");
    const double sd = p.sigma * std::sqrt(dt);
    const double a = ((p.sigma * p.sigma / 2.0 - p.mu) * dt + std::log(y * (1.0 - x) / ((1.0 - y) * x))) / sd;
    const double e = std::exp(-0.5 * a * a);
    if (e == 0.0) return 0.0;
    return e / (sd * y * (1.0 - y) * std::sqrt(2.0 * std::numbers::pi));
}

struct FkOptions {
    /// Number of dyadic time panels in u = lam (s - t).
    int time_panels = 12;
    /// Panels across the +-10 sd window in logit space.
    int space_panels = 8;
    double u_max = 40.0;
    /// Relative gap between the 64- and 30-node estimates above which a
    /// NumericalError is raised.
    double max_rel_error = 1e-5;
};

struct FkEval {
    double value = 0.0;
    double error_estimate = 0.0;
};

namespace detail {

template <unsigned N, class F>
double gauss_panels(F&& f, double a, double b, int panels) {
    using Q = boost::math::quadrature::gauss<double, N>;
    double sum = 0.0;
    const double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k) sum += Q::integrate(f, a + k * h, a + (k + 1) * h);
    return sum;
}

// E[f(Y_{t+dt})] from x, integrating against the Gaussian in w = logit(Y).
template <unsigned N, class F>
double expect_y(const ModelParams& p, double dt, double x, F&& f, int panels) {
    const double sd = p.sigma * std::sqrt(dt);
    const double m = logit(x) + (p.mu - p.sigma * p.sigma / 2.0) * dt;
    const double inv = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
    auto g = [&](double w) {
        const double a = (w - m) / sd;
        return f(logistic(w)) * inv * std::exp(-0.5 * a * a);
    };
    return gauss_panels<N>(g, m - 10.0 * sd, m + 10.0 * sd, panels);
}

// int_0^U e^{-u} h(u) du on dyadic panels refined toward u = 0.
template <unsigned N, class H>
double dyadic_time_integral(H&& h, double U, int panels) {
    using Q = boost::math::quadrature::gauss<double, N>;
    auto f = [&](double u) { return std::exp(-u) * h(u); };
    double sum = 0.0, hi = U;
    for (int k = 0; k < panels - 1; ++k) {
        sum += Q::integrate(f, hi / 2.0, hi);
        hi /= 2.0;
    }
    return sum + Q::integrate(f, 0.0, hi);
}

inline double z_of(const ModelParams& p, double x, double y) {
    return std::pow((1.0 - x) / (1.0 - y), p.one_minus_gamma());
}

inline double dz_dx(const ModelParams& p, double x, double y) {
    return p.one_minus_gamma() * (y - x) / ((1.0 - y) * x) * std::pow((1.0 - y) / (1.0 - x), p.gamma);
}

inline double dy_dx(double x, double y) { return y * (1.0 - y) / (x * (1.0 - x)); }

template <unsigned N>
double fk_value_n(const Solution& sol, double t, double x, const FkOptions& opt) {
    const ModelParams& p = sol.surface.params();
    const double lam = p.lambda, tau = p.T - t;
    const double U = std::min(lam * tau, opt.u_max);
    const double term = std::exp(-lam * tau) *
                        expect_y<N>(p, tau, x, [&](double y) { return z_of(p, x, y); }, opt.space_panels);
    auto inner = [&](double u) {
        const double s = t + u / lam;
        return expect_y<N>(
            p, u / lam, x, [&](double y) { return z_of(p, x, y) * sol.L_at(s, y); }, opt.space_panels);
    };
    return term + dyadic_time_integral<N>(inner, U, opt.time_panels);
}

template <unsigned N>
double fk_deriv_n(const Solution& sol, double t, double x, const FkOptions& opt) {
    const ModelParams& p = sol.surface.params();
    const double lam = p.lambda, tau = p.T - t;
    const double U = std::min(lam * tau, opt.u_max);
    const double term = std::exp(-lam * tau) *
                        expect_y<N>(p, tau, x, [&](double y) { return dz_dx(p, x, y); }, opt.space_panels);
    auto inner = [&](double u) {
        const double s = t + u / lam;
        return expect_y<N>(
            p, u / lam, x,
            [&](double y) {
                return dz_dx(p, x, y) * sol.L_at(s, y) + z_of(p, x, y) * sol.Lx_at(s, y) * dy_dx(x, y);
            },
            opt.space_panels);
    };
    return term + dyadic_time_integral<N>(inner, U, opt.time_panels);
}

inline void check_fk_args(const Solution& sol, double t, double x) {
    const ModelParams& p = sol.surface.params();
    if (!(t >= 0.0 && t < p.T)) throw ValidationError("fk: t must lie in [0,T)");
    if (!(x > 0.0 && x < 1.0)) throw ValidationError("fk: x must lie in (0,1)");
}

inline FkEval finish(double fine, double coarse, double max_rel, const char* what) {
    FkEval r{fine, std::abs(fine - coarse)};
    if (r.error_estimate > max_rel * std::max(1.0, std::abs(fine)))
        throw NumericalError(std::string(what) + ": quadrature did not converge, estimated error " +
                             fmt(r.error_estimate));
    return r;
}

}  // namespace detail

/// E[Z_{t+dt}] from x.
inline double expected_z(const ModelParams& p, double dt, double x) {
    if (x == 0.0) return 1.0;
    if (x == 1.0) return std::exp(p.one_minus_gamma() * (p.mu - p.gamma * p.sigma * p.sigma / 2.0) * dt);
    return detail::expect_y<64>(p, dt, x, [&](double y) { return detail::z_of(p, x, y); }, 8);
}

inline FkEval fk_value_eval(const Solution& sol, double t, double x, const FkOptions& opt = {}) {
    detail::check_fk_args(sol, t, x);
    return detail::finish(detail::fk_value_n<64>(sol, t, x, opt), detail::fk_value_n<30>(sol, t, x, opt),
                          opt.max_rel_error, "fk_value");
}

inline double fk_value(const Solution& sol, double t, double x, const FkOptions& opt = {}) {
    return fk_value_eval(sol, t, x, opt).value;
}

inline FkEval fk_deriv_eval(const Solution& sol, double t, double x, const FkOptions& opt = {}) {
    detail::check_fk_args(sol, t, x);
    return detail::finish(detail::fk_deriv_n<64>(sol, t, x, opt), detail::fk_deriv_n<30>(sol, t, x, opt),
                          opt.max_rel_error, "fk_deriv");
}

inline double fk_deriv(const Solution& sol, double t, double x, const FkOptions& opt = {}) {
    return fk_deriv_eval(sol, t, x, opt).value;
}

struct FkComparison {
    double t, x, v_pde, v_fk, rel_err;
};

/// Solver vs oracle on n seeded points t in [0, 0.95 T), x in [0.02, 0.98].
inline std::vector<FkComparison> fk_compare(const Solution& sol, std::size_t n, std::uint64_t seed,
                                            const FkOptions& opt = {}) {
    const double T = sol.surface.params().T;
    auto g = rng::path_stream(seed, 0);
    std::vector<FkComparison> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = 0.95 * T * (1.0 - g.uniform());
        const double x = 0.02 + 0.96 * g.uniform();
        const double v = sol.surface.value_at(t, x);
        const double f = fk_value(sol, t, x, opt);
        out.push_back({t, x, v, f, std::abs(f - v) / std::abs(v)});
    }
    return out;
}

inline void write_fk_csv(std::ostream& os, const std::vector<FkComparison>& rows,
                         const std::vector<std::string>& header) {
    write_comment_header(os, header);
    os << "t,x,v_pde,v_fk,rel_err\n";
    for (const auto& r : rows)
        os << fmt(r.t) << ',' << fmt(r.x) << ',' << fmt(r.v_pde) << ',' << fmt(r.v_fk) << ',' << fmt(r.rel_err)
           << '\n';
}

}  // namespace illiq
