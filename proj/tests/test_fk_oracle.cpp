#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <sstream>

#include "illiq/fk_oracle.hpp"
#include "illiq/hjb_solver.hpp"
#include "illiq/rng.hpp"

using namespace illiq;

namespace {

const Solution& fig1() {
    static const Solution s = solve(ModelParams{}, SpatialGrid(-12, 12, 4000), 2000);
    return s;
}

// adaptive Gauss-Kronrod in y over (0,1), split at the median of Y
template <class F>
double y_integral(F&& f, double x, double dt, const ModelParams& p) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double med = logistic(logit(x) + (p.mu - p.sigma * p.sigma / 2) * dt);
    auto g = [&](double y) { return (y <= 0.0 || y >= 1.0) ? 0.0 : f(y) * density(p, y, dt, x); };
    return GK::integrate(g, 0.0, med, 15, 1e-12) + GK::integrate(g, med, 1.0, 15, 1e-12);
}

}  // namespace

TEST(FkOracle, DensityNormalised) {
    for (const ModelParams& p : {ModelParams{}, make_params(0.1, 0.5, 2.0, 1, 0, 0, 1)})
        for (double x : {0.01, 0.2, 0.5, 0.93})
            for (double dt : {1e-3, 0.1, 1.0}) {
                const double m = y_integral([](double) { return 1.0; }, x, dt, p);
                EXPECT_NEAR(m, 1.0, 1e-8) << "x=" << x << " dt=" << dt;
            }
}

TEST(FkOracle, DensityConcentratesForSmallSteps) {
    const ModelParams p;
    const double x = 0.3, dt = 1e-4, sd = p.sigma * std::sqrt(dt);
    const double lo = logistic(logit(x) - 5 * sd), hi = logistic(logit(x) + 5 * sd);
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double mass = GK::integrate([&](double y) { return density(p, y, dt, x); }, lo, hi, 15, 1e-12);
    EXPECT_GT(mass, 0.999);
    EXPECT_EQ(density(p, 0.99, 1e-6, 0.01), 0.0);
    EXPECT_THROW(density(p, 0.0, 0.1, 0.5), ValidationError);
    EXPECT_THROW(density(p, 0.5, 0.0, 0.5), ValidationError);
}

TEST(FkOracle, DensityModeDriftsInLogitSpace) {
    // the density of w = logit(Y) peaks at logit(x) + (mu - s^2/2) dt
    const ModelParams p;
    const double x = 0.4, dt = 0.5;
    auto wdens = [&](double w) {
        const double y = logistic(w);
        return density(p, y, dt, x) * y * (1 - y);
    };
    const double peak = logit(x) + (p.mu - p.sigma * p.sigma / 2) * dt;
    EXPECT_GT(wdens(peak), wdens(peak + 1e-3));
    EXPECT_GT(wdens(peak), wdens(peak - 1e-3));
    // and matches a Monte Carlo histogram of Y
    rng::Xoshiro256ss g(5);
    int below = 0;
    const int n = 200000;
    const double cut = 0.35;
    for (int i = 0; i < n; ++i) {
        const double A = std::exp((p.mu - p.sigma * p.sigma / 2) * dt + p.sigma * std::sqrt(dt) * g.normal());
        below += x * A / (x * A + 1 - x) < cut;
    }
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double cdf = GK::integrate([&](double y) { return y <= 0 ? 0.0 : density(p, y, dt, x); }, 0.0, cut, 15);
    EXPECT_NEAR(static_cast<double>(below) / n, cdf, 4 * std::sqrt(cdf * (1 - cdf) / n));
}

TEST(FkOracle, ExpectedZTwoRoutes) {
    for (const ModelParams& p : {ModelParams{}, make_params(0.1, 0.5, 2.0, 1, 0, 0, 1),
                                 make_params(0.05, 0.4, 0.5, 1, 0.01, 0.01, 10)})
        for (double x : {0.05, 0.3, 0.7, 0.95})
            for (double dt : {0.01, 0.3, 1.0}) {
                const double a = expected_z(p, dt, x);
                const double b = y_integral([&](double y) { return std::pow((1 - x) / (1 - y), 1 - p.gamma); }, x,
                                            dt, p);
                EXPECT_NEAR(a, b, 1e-8 * b);
            }
    const ModelParams p;
    EXPECT_EQ(expected_z(p, 0.5, 0.0), 1.0);
    EXPECT_NEAR(expected_z(p, 0.5, 1.0), std::exp(0.1 * (0.2 - 0.45) * 0.5), 1e-15);
    // interior route tends to the closed-form endpoint
    EXPECT_NEAR(expected_z(p, 0.5, 1.0 - 1e-9), expected_z(p, 0.5, 1.0), 1e-7);
}

TEST(FkOracle, MatchesSolverOnSeededPanel) {
    const auto rows = fk_compare(fig1(), 20, 2024);
    ASSERT_EQ(rows.size(), 20u);
    for (const auto& r : rows) EXPECT_LE(r.rel_err, 1e-3) << "t=" << r.t << " x=" << r.x;
    std::ostringstream os;
    write_fk_csv(os, rows, {});
    EXPECT_EQ(os.str().rfind("t,x,v_pde,v_fk,rel_err\n", 0), 0u);
}

TEST(FkOracle, NearHorizonIsOne) {
    EXPECT_NEAR(fk_value(fig1(), 1.0 - 1e-10, 0.4), 1.0, 1e-8);
    EXPECT_THROW(fk_value(fig1(), 1.0, 0.4), ValidationError);
    EXPECT_THROW(fk_value(fig1(), 0.5, 0.0), ValidationError);
}

TEST(FkOracle, DerivativeAtBoundariesAndSigns) {
    const auto& s = fig1();
    const ModelParams p;
    const std::size_t K = s.region.levels() - 1;
    const double yl = s.region.lower[K], yu = s.region.upper[K];
    const double foc_l = (1 - p.gamma) * p.eps_buy * s.surface.value_at(0, yl) / (1 + p.eps_buy * yl);
    const double foc_u = -(1 - p.gamma) * p.eps_sell * s.surface.value_at(0, yu) / (1 - p.eps_sell * yu);
    EXPECT_NEAR(fk_deriv(s, 0.0, yl), foc_l, 1e-3);
    EXPECT_NEAR(fk_deriv(s, 0.0, yu), foc_u, 1e-3);
    EXPECT_GT(fk_deriv(s, 0.0, 0.5 * yl), 0.0);
    EXPECT_LT(fk_deriv(s, 0.0, 0.5 * (yu + 1)), 0.0);
    for (double x : {0.1, 0.5, 0.8}) EXPECT_NEAR(fk_deriv(s, 0.2, x), s.surface.deriv_x_at(0.2, x), 1e-4);
}

TEST(FkOracle, NoCostsReducesToSearchOnlyForm) {
    ModelParams p;
    p.eps_buy = p.eps_sell = 0.0;
    const Solution s = solve(p, SpatialGrid(-12, 12, 3000), 1500);
    const double t = 0.3, x = 0.6;
    // L is flat in y, so the inner expectation is E[Z_s] v(s, y_hat(s))
    const double lam = p.lambda, tau = p.T - t;
    const double direct = fk_value(s, t, x);
    using Q = boost::math::quadrature::gauss<double, 64>;
    double alt = std::exp(-lam * tau) * expected_z(p, tau, x);
    auto f = [&](double u) {
        const double sv = t + u / lam;
        if (u == 0.0) return s.L_at(sv, 0.5);
        return std::exp(-u) * expected_z(p, u / lam, x) * s.L_at(sv, 0.5);
    };
    double hi = lam * tau;
    for (int k = 0; k < 11; ++k, hi /= 2) alt += Q::integrate(f, hi / 2, hi);
    alt += Q::integrate(f, 0.0, hi);
    EXPECT_NEAR(direct, alt, 1e-9);
    EXPECT_NEAR(direct, s.surface.value_at(t, x), 1e-3);
    // v_x vanishes at the common target
    const std::size_t k = s.region.level_at_or_before(0.0);
    EXPECT_NEAR(fk_deriv(s, 0.0, s.region.lower[k]), 0.0, 1e-3);
}
