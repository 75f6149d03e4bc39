#pragma once

/// Backward finite-difference solver for the HJB equation with the nonlocal
/// rebalancing term, on a logit-space grid.
///
/// In z = logit(x) the local operator has constant diffusion:
///   v_t + (mu - s^2/2 + (1-g) s^2 h(z)) v_z + s^2/2 v_zz + (Q(h(z)) - lam) v + lam L = 0,
/// and at x in {0, 1} only the reaction and L terms remain.
///
/// Time stepping is backward Euler. The no-trade boundaries used in L are
/// taken from the later (already computed) slice; with those boundaries
/// frozen, L is linear in the new slice: L = v inside the band and a scaled
/// copy of v at the nearest boundary outside it. That makes each step a
/// tridiagonal system plus a rank-2 correction, solved exactly with the
/// Sherman-Morrison-Woodbury identity.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "illiq/grid.hpp"
#include "illiq/io.hpp"
#include "illiq/model.hpp"
#include "illiq/no_trade.hpp"

namespace illiq {

/// L(t, x): the rebalancing payoff given the band [lower, upper] of this slice.
inline double compute_L(const SliceView& s, const Boundaries& b, const ModelParams& p, double x) {
    const double omg = p.one_minus_gamma();
    if (b.lower > b.upper) throw NumericalError("compute_L: degenerate region");
    if (x <= b.lower)
        return s.value(b.lower) * std::pow((1.0 + p.eps_buy * x) / (1.0 + p.eps_buy * b.lower), omg);
    if (x >= b.upper)
        return s.value(b.upper) * std::pow((1.0 - p.eps_sell * x) / (1.0 - p.eps_sell * b.upper), omg);
    return s.value(x);
}

/// dL/dx, continuous across the boundaries when they satisfy the FOCs.
inline double compute_Lx(const SliceView& s, const Boundaries& b, const ModelParams& p, double x) {
    const double omg = p.one_minus_gamma();
    if (b.lower > b.upper) throw NumericalError("compute_Lx: degenerate region");
    if (x < b.lower) {
        const double ratio = (1.0 + p.eps_buy * x) / (1.0 + p.eps_buy * b.lower);
        return p.eps_buy * omg * s.value(b.lower) / (1.0 + p.eps_buy * x) * std::pow(ratio, omg);
    }
    if (x > b.upper) {
        const double ratio = (1.0 - p.eps_sell * x) / (1.0 - p.eps_sell * b.upper);
        return -p.eps_sell * omg * s.value(b.upper) / (1.0 - p.eps_sell * x) * std::pow(ratio, omg);
    }
    return s.dx(x);
}

struct SolverOptions {
    std::size_t n_t = 1000;
    /// n_t is raised until lambda * dt <= max_lambda_dt.
    double max_lambda_dt = 0.1;
    /// Upper bound on stored time levels (the region keeps every level).
    std::size_t max_stored_levels = 2001;
    /// Absolute slack on the explicit value bounds.
    double bound_slack = 1e-6;
};

/// Solved surface plus the no-trade region on every solver level.
struct Solution {
    ValueSurface surface;
    NoTradeRegion region;
    std::vector<std::size_t> stored_level;  // solver level index of each stored level
    std::size_t n_t = 0;

    Boundaries boundaries_at_stored(std::size_t k) const {
        const std::size_t lvl = stored_level[k];
        return {region.lower[lvl], region.upper[lvl], 0, 0};
    }

    /// L(s, y) interpolated linearly in time between stored levels.
    double L_at(double t, double y) const {
        auto [k, w] = surface.bracket(t);
        const ModelParams& p = surface.params();
        const double a = compute_L(surface.slice(k), boundaries_at_stored(k), p, y);
        if (w == 0.0) return a;
        const double b = compute_L(surface.slice(k + 1), boundaries_at_stored(k + 1), p, y);
        return (1.0 - w) * a + w * b;
    }

    double Lx_at(double t, double y) const {
        auto [k, w] = surface.bracket(t);
        const ModelParams& p = surface.params();
        const double a = compute_Lx(surface.slice(k), boundaries_at_stored(k), p, y);
        if (w == 0.0) return a;
        const double b = compute_Lx(surface.slice(k + 1), boundaries_at_stored(k + 1), p, y);
        return (1.0 - w) * a + w * b;
    }
};

namespace detail {

// Thomas algorithm; sub[0] and sup[n-1] are ignored.
inline void solve_tridiagonal(const std::vector<double>& sub, const std::vector<double>& diag,
                              const std::vector<double>& sup, std::vector<double>& rhs,
                              std::vector<double>& scratch) {
    const std::size_t n = diag.size();
    scratch.resize(n);
    double beta = diag[0];
    rhs[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
        scratch[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * scratch[i];
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i + 1] * rhs[i + 1];
}

}  // namespace detail

/// Smallest admissible step count >= requested n_t.
inline std::size_t effective_steps(const ModelParams& p, const SolverOptions& opt) {
    std::size_t n = std::max<std::size_t>(opt.n_t, 1);
    const double need = p.lambda * p.T / opt.max_lambda_dt;
    if (static_cast<double>(n) < need) n = static_cast<std::size_t>(std::ceil(need));
    return n;
}

inline Solution solve(const ModelParams& params, const SpatialGrid& grid, const SolverOptions& opt = {}) {
    params.validate();
    grid.check_covers_merton(params);
    if (!(opt.max_lambda_dt > 0.0)) throw ValidationError("solve: max_lambda_dt must be > 0");

    const std::size_t n_t = effective_steps(params, opt);
    const double dt = params.T / static_cast<double>(n_t);
    if (!(params.lambda * dt <= opt.max_lambda_dt * (1.0 + 1e-12)))
        throw NumericalError("solve: stability condition lambda*dt <= max_lambda_dt violated");

    const std::size_t N = grid.size();
    const std::size_t n = grid.n_z();
    const double lam = params.lambda, omg = params.one_minus_gamma();
    const double D = params.sigma * params.sigma / 2.0;
    const double h = grid.dz();
    const double q = grid.ghost_decay();
    const auto [v_lo, v_hi] = value_bounds(params);

    // Static parts of the local operator.
    std::vector<double> A_lo(N, 0.0), A_up(N, 0.0), Q(N);
    for (std::size_t i = 0; i < N; ++i) Q[i] = q_of(params, grid.x(i));
    for (std::size_t i = 1; i <= n; ++i) {
        const double b = params.mu - D + omg * params.sigma * params.sigma * grid.x(i);
        const double d = D / (h * h);
        if (std::abs(b) * h <= 2.0 * D) {
            A_lo[i] = d - b / (2.0 * h);
            A_up[i] = d + b / (2.0 * h);
        } else if (b > 0.0) {
            A_lo[i] = d;
            A_up[i] = d + b / h;
        } else {
            A_lo[i] = d - b / h;
            A_up[i] = d;
        }
    }

    std::size_t stride = 1;
    if (opt.max_stored_levels >= 2 && n_t + 1 > opt.max_stored_levels)
        stride = (n_t + opt.max_stored_levels - 2) / (opt.max_stored_levels - 1);

    Solution sol{ValueSurface(params, grid, dt), NoTradeRegion{}, {}, n_t};
    std::vector<double> v(N, 1.0), next(N);
    std::vector<double> sub(N), diag(N), sup(N), scratch(N), u_lo(N), u_up(N);
    sol.surface.append_level(params.T, v);
    sol.stored_level.push_back(0);

    for (std::size_t k = 0; k < n_t; ++k) {
        const double t_k = params.T - static_cast<double>(k) * dt;
        const double t_next = params.T - static_cast<double>(k + 1) * dt;
        const SliceView cur(grid, v);
        const Boundaries bnd = extract_boundaries(cur, params);
        sol.region.push(k == 0 ? params.T : t_k, bnd, cur);

        // assemble M v_next = v
        std::fill(sub.begin(), sub.end(), 0.0);
        std::fill(sup.begin(), sup.end(), 0.0);
        std::fill(u_lo.begin(), u_lo.end(), 0.0);
        std::fill(u_up.begin(), u_up.end(), 0.0);
        for (std::size_t i = 0; i < N; ++i) {
            const double x = grid.x(i);
            double dg = 1.0 - dt * Q[i];
            if (i >= 1 && i <= n) {
                dg += dt * (A_lo[i] + A_up[i]);
                if (i == 1) {
                    sub[i] = -dt * A_lo[i] * (1.0 - q);
                    dg -= dt * A_lo[i] * q;
                } else {
                    sub[i] = -dt * A_lo[i];
                }
                if (i == n) {
                    sup[i] = -dt * A_up[i] * (1.0 - q);
                    dg -= dt * A_up[i] * q;
                } else {
                    sup[i] = -dt * A_up[i];
                }
            }
            if (x <= bnd.lower) {
                dg += dt * lam;
                u_lo[i] = -dt * lam * std::pow((1.0 + params.eps_buy * x) / (1.0 + params.eps_buy * bnd.lower), omg);
            } else if (x >= bnd.upper) {
                dg += dt * lam;
                u_up[i] = -dt * lam * std::pow((1.0 - params.eps_sell * x) / (1.0 - params.eps_sell * bnd.upper), omg);
            }
            // inside the band lam (L - v) vanishes identically
            diag[i] = dg;
        }

        // rows of the rank-2 update: interpolation weights of v(lower), v(upper)
        const auto [jl, wl] = grid.locate(bnd.lower);
        const auto [ju, wu] = grid.locate(bnd.upper);
        auto dot_lo = [&, jl = jl, wl = wl](const std::vector<double>& y) {
            return (1.0 - wl) * y[jl] + wl * y[jl + 1];
        };
        auto dot_up = [&, ju = ju, wu = wu](const std::vector<double>& y) {
            return (1.0 - wu) * y[ju] + wu * y[ju + 1];
        };

        next = v;
        detail::solve_tridiagonal(sub, diag, sup, next, scratch);
        detail::solve_tridiagonal(sub, diag, sup, u_lo, scratch);
        detail::solve_tridiagonal(sub, diag, sup, u_up, scratch);
        // (I + V^T T^-1 U) c = V^T T^-1 b
        const double m11 = 1.0 + dot_lo(u_lo), m12 = dot_lo(u_up);
        const double m21 = dot_up(u_lo), m22 = 1.0 + dot_up(u_up);
        const double r1 = dot_lo(next), r2 = dot_up(next);
        const double det = m11 * m22 - m12 * m21;
        if (!(std::abs(det) > 1e-300)) throw NumericalError("solve: singular low-rank correction");
        const double c1 = (r1 * m22 - m12 * r2) / det;
        const double c2 = (m11 * r2 - m21 * r1) / det;
        for (std::size_t i = 0; i < N; ++i) next[i] -= c1 * u_lo[i] + c2 * u_up[i];

        for (std::size_t i = 0; i < N; ++i) {
            if (!std::isfinite(next[i])) {
                std::ostringstream os;
                os << "solve: non-finite value at time level " << (k + 1) << " (t=" << t_next << "), node " << i;
                throw NumericalError(os.str());
            }
            if (next[i] < v_lo - opt.bound_slack || next[i] > v_hi + opt.bound_slack) {
                std::ostringstream os;
                os.precision(17);
                os << "solve: value bound violated at time level " << (k + 1) << " (t=" << t_next
                   << "), node " << i << ": v=" << next[i] << " not in [" << v_lo << ", " << v_hi << "]";
                throw NumericalError(os.str());
            }
        }
        v.swap(next);
        const bool last = (k + 1 == n_t);
        if ((k + 1) % stride == 0 || last) {
            sol.surface.append_level(last ? 0.0 : t_next, v);
            sol.stored_level.push_back(k + 1);
        }
    }
    {
        const SliceView cur(grid, v);
        sol.region.push(0.0, extract_boundaries(cur, params), cur);
    }
    const ThresholdTimes tt = threshold_times(params, sol.region);
    sol.region.t_lower = tt.t_lower;
    sol.region.t_upper = tt.t_upper;
    return sol;
}

inline Solution solve(const ModelParams& params, const SpatialGrid& grid, std::size_t n_t) {
    SolverOptions opt;
    opt.n_t = n_t;
    return solve(params, grid, opt);
}

/// Surface as CSV with columns t, x, v. Every time_stride-th stored level
/// (plus t = 0) and every x_stride-th node (plus x = 1) are written.
inline void write_surface_csv(std::ostream& os, const ValueSurface& s, const std::vector<std::string>& header,
                              std::size_t time_stride = 1, std::size_t x_stride = 1) {
    if (time_stride == 0 || x_stride == 0) throw ValidationError("write_surface_csv: strides must be >= 1");
    write_comment_header(os, header);
    os << "t,x,v\n";
    const std::size_t K = s.levels(), N = s.grid().size();
    for (std::size_t k = 0; k < K; ++k) {
        if (k % time_stride != 0 && k + 1 != K) continue;
        const auto row = s.row(k);
        const std::string t = fmt(s.times()[k]);
        for (std::size_t i = 0; i < N; ++i) {
            if (i % x_stride != 0 && i + 1 != N) continue;
            os << t << ',' << fmt(s.grid().x(i)) << ',' << fmt(row[i]) << '\n';
        }
    }
}

}  // namespace illiq
