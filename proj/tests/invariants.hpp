#pragma once

// Invariant checks shared by the property tests and the acceptance runner.
// Each check returns the worst observed value of a quantity that must stay
// at or below its tolerance.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "illiq/fk_oracle.hpp"
#include "illiq/hjb_solver.hpp"
#include "illiq/no_trade.hpp"
#include "illiq/policy_sim.hpp"
#include "illiq/rng.hpp"

namespace invariants {

using namespace illiq;

struct Case {
    std::string name;
    ModelParams p;
};

inline std::vector<Case> panel() {
    ModelParams base;
    ModelParams hi_gamma;
    hi_gamma.mu = 0.1;
    hi_gamma.sigma = 0.5;
    hi_gamma.gamma = 2.0;
    ModelParams third;
    third.mu = 0.05;
    third.sigma = 0.4;
    third.gamma = 0.5;
    third.eps_buy = third.eps_sell = 0.01;
    third.lambda = 10.0;
    return {{"base", base}, {"gamma2", hi_gamma}, {"third", third}};
}

inline Solution solve_small(const ModelParams& p) { return solve(p, SpatialGrid(-10, 10, 1200), 400); }

struct Check {
    double worst;
    double tol;
    bool pass() const { return worst <= tol; }
};

// random (t, x), x drawn in logit space so both edges get covered
struct PointGen {
    rng::Xoshiro256ss g;
    double T;
    double t() { return T * g.uniform(); }
    double x() { return logistic(-8.0 + 16.0 * g.uniform()); }
};

inline double sup_norm(const ValueSurface& s) {
    double m = 0.0;
    for (std::size_t k = 0; k < s.levels(); ++k)
        for (double v : s.row(k)) m = std::max(m, std::abs(v));
    return m;
}

/// |v(T, .) - 1|
inline Check terminal(const Solution& s) {
    double w = 0.0;
    for (double v : s.surface.row(0)) w = std::max(w, std::abs(v - 1.0));
    return {w, 0.0};
}

/// distance outside [lo, hi] from value_bounds
inline Check bounds(const ModelParams& p, const Solution& s) {
    const auto [lo, hi] = value_bounds(p);
    double w = -1.0;
    for (std::size_t k = 0; k < s.surface.levels(); ++k)
        for (double v : s.surface.row(k)) w = std::max({w, lo - v, v - hi});
    return {w, 1e-6};
}

/// chord excess of v/(1-g) over the function, relative to ||v||
inline Check concavity(const ModelParams& p, const Solution& s, std::uint64_t seed, int n = 300) {
    const auto& sf = s.surface;
    const double omg = p.one_minus_gamma();
    const double norm = sup_norm(sf);
    PointGen gen{rng::Xoshiro256ss(seed), p.T};
    double w = -1.0;
    for (int i = 0; i < n; ++i) {
        const double t = gen.t();
        const double a = gen.x(), b = gen.x();
        const double l = gen.g.uniform();
        const double m = l * a + (1.0 - l) * b;
        const double chord = (l * sf.value_at(t, a) + (1.0 - l) * sf.value_at(t, b)) / omg;
        w = std::max(w, (chord - sf.value_at(t, m) / omg) / norm);
    }
    return {w, 1e-6};
}

/// worst violation of: v/(1-g) non-increasing in costs and non-decreasing in lambda
inline Check monotone(const ModelParams& p, std::uint64_t seed, int n = 200) {
    rng::Xoshiro256ss g(seed);
    const double sign = 1.0 / p.one_minus_gamma();
    ModelParams more_cost = p, more_lambda = p;
    more_cost.eps_buy *= 1.0 + g.uniform();
    more_cost.eps_sell *= 1.0 + g.uniform();
    more_lambda.lambda *= 1.0 + g.uniform();
    const SpatialGrid grid(-10, 10, 600);
    // same dt for every solve so only the parameter changes
    SolverOptions o;
    o.n_t = 200;
    const std::size_t n_t = std::max(effective_steps(p, o), effective_steps(more_lambda, o));
    const Solution s0 = solve(p, grid, n_t);
    const Solution sc = solve(more_cost, grid, n_t);
    const Solution sl = solve(more_lambda, grid, n_t);
    PointGen gen{rng::Xoshiro256ss(seed + 1), p.T};
    double w = -1.0;
    for (int i = 0; i < n; ++i) {
        const double t = gen.t(), x = gen.x();
        const double v = s0.surface.value_at(t, x);
        w = std::max(w, sign * (sc.surface.value_at(t, x) - v));
        w = std::max(w, -sign * (sl.surface.value_at(t, x) - v));
    }
    return {w, 1e-8};
}

/// max of lower - upper over all levels, and of excursions outside [0, 1]
inline Check ordered(const Solution& s) {
    double w = -1.0;
    for (std::size_t k = 0; k < s.region.levels(); ++k)
        w = std::max({w, s.region.lower[k] - s.region.upper[k], -s.region.lower[k], s.region.upper[k] - 1.0});
    return {w, 0.0};
}

/// |FOC residual| / v at interior boundaries of every stored level
inline Check foc(const ModelParams& p, const Solution& s) {
    double w = 0.0;
    for (std::size_t k = 0; k < s.surface.levels(); ++k) {
        const SliceView sl = s.surface.slice(k);
        const Boundaries b = s.boundaries_at_stored(k);
        if (b.lower > 0.0 && b.lower < 1.0)
            w = std::max(w, std::abs(lower_foc_residual(sl, p, b.lower)) / sl.value(b.lower));
        if (b.upper > 0.0 && b.upper < 1.0)
            w = std::max(w, std::abs(upper_foc_residual(sl, p, b.upper)) / sl.value(b.upper));
    }
    return {w, 1e-8};
}

/// |integral of the transition density - 1| in y-space
inline Check density_mass(const ModelParams& p, std::uint64_t seed, int n = 25) {
    rng::Xoshiro256ss g(seed);
    double w = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = 0.02 + 0.96 * g.uniform();
        const double dt = 0.001 + 2.0 * g.uniform();
        // integrate density(y) dy after the substitution y = logistic(u)
        auto f = [&](double u) {
            const double y = logistic(u);
            return density(p, y, dt, x) * y * (1.0 - y);
        };
        const double sd = p.sigma * std::sqrt(dt);
        const double m = logit(x) + (p.mu - p.sigma * p.sigma / 2.0) * dt;
        w = std::max(w, std::abs(detail::gauss_panels<64>(f, m - 12.0 * sd, m + 12.0 * sd, 8) - 1.0));
    }
    return {w, 1e-8};
}

/// 0 if two runs with one seed (different thread counts) print identical bytes
inline Check reproducible(const ModelParams& p, const Solution& s, std::uint64_t seed) {
    const std::vector<Policy> pols{Policy::optimal_band(s.region), Policy::no_trade(),
                                   Policy::fixed_target(std::clamp(merton_fraction(p), 0.0, 1.0))};
    const double x0 = std::clamp(merton_fraction(p), 0.0, 1.0);
    auto run = [&](unsigned threads) {
        std::ostringstream os;
        SimOptions o;
        o.threads = threads;
        o.path_csv = &os;
        for (const auto& r : simulate_many(p, pols, x0, 1.0, 9000, seed, o))
            os << r.policy << ',' << fmt(r.mean_utility) << ',' << fmt(r.std_error) << ',' << fmt(r.diff_vs_first)
               << '\n';
        return os.str();
    };
    return {run(1) == run(3) ? 0.0 : 1.0, 0.0};
}

}  // namespace invariants
