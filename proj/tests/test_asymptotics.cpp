#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "illiq/asymptotics.hpp"

using namespace illiq;

namespace {

ModelParams high_gamma() {
    ModelParams p;
    p.gamma = 2.0;
    p.mu = 0.1;
    p.sigma = 0.5;
    return p;
}

// straight evaluation of the defining formulas, fine for moderate c
double a1_direct(const ModelParams& p, double c) {
    const double y = merton_fraction(p), s = p.sigma;
    const double K = 3 * std::sqrt(2.0) * std::pow(c, 1.5) / (p.gamma * s * s * s * y * (1 - y));
    return s * y * (1 - y) / std::sqrt(2 * c) * (std::cbrt(K + 1) - 1);
}

double a2_direct(const ModelParams& p, double c) {
    const double y = merton_fraction(p), s = p.sigma;
    const double K = 3 * std::sqrt(2.0) * std::pow(c, 1.5) / (p.gamma * s * s * s * y * (1 - y));
    return p.gamma * (1 - p.gamma) * std::pow(s, 4) * y * y * (1 - y) * (1 - y) / (4 * c) *
           (std::pow(K + 1, 2.0 / 3.0) + 1);
}

}  // namespace

TEST(Asymptotics, ReferenceValuesAtUnitC) {
    const ModelParams p;
    EXPECT_NEAR(a1(p, 1.0), 0.2501, 1e-4);
    EXPECT_NEAR(a2(p, 1.0), 0.00691, 1e-5);
    for (double c : {1e-3, 0.1, 1.0, 7.0, 1e3}) {
        EXPECT_NEAR(a1(p, c) / a1_direct(p, c), 1.0, 1e-12);
        EXPECT_NEAR(a2(p, c) / a2_direct(p, c), 1.0, 1e-12);
        const ModelParams q = high_gamma();
        EXPECT_NEAR(a1(q, c) / a1_direct(q, c), 1.0, 1e-12);
        EXPECT_NEAR(a2(q, c) / a2_direct(q, c), 1.0, 1e-12);
    }
}

TEST(Asymptotics, SignsOfCoefficients) {
    for (double c : log_grid(1e-6, 1e6, 50)) {
        EXPECT_GT(a1(ModelParams{}, c), 0.0);
        EXPECT_GT(a2(ModelParams{}, c), 0.0);
        EXPECT_GT(a1(high_gamma(), c), 0.0);
        // a2 carries the factor 1 - gamma
        EXPECT_LT(a2(high_gamma(), c), 0.0);
    }
}

TEST(Asymptotics, MonotoneOnScannedGrid) {
    const ModelParams p;
    const auto cs = log_grid(1e-3, 1e3, 601);
    for (std::size_t i = 1; i < cs.size(); ++i) {
        EXPECT_GT(a1(p, cs[i]), a1(p, cs[i - 1]));
        EXPECT_LT(a2(p, cs[i]), a2(p, cs[i - 1]));
        EXPECT_GT(sqrt_c_a1(p, cs[i]), sqrt_c_a1(p, cs[i - 1]));
        EXPECT_GT(c_a2(p, cs[i]), c_a2(p, cs[i - 1]));
    }
    const BridgeLimits b = bridge_limits(p);
    EXPECT_LT(a1(p, 1e3), b.a1_inf);
    EXPECT_GT(a2(p, 1e3), b.a2_inf);
    EXPECT_GT(c_a2(p, 1e-3), b.c_a2_zero);
}

TEST(Asymptotics, BridgeLimits) {
    for (const ModelParams& p : {ModelParams{}, high_gamma()}) {
        const BridgeLimits b = bridge_limits(p);
        // a1 approaches its limit like c^{-1/2}
        EXPECT_LE(std::abs(a1(p, 1e9) / b.a1_inf - 1.0), 1e-3);
        EXPECT_LE(std::abs(a1(p, 1e13) / b.a1_inf - 1.0), 1e-6);
        EXPECT_LE(std::abs(a2(p, 1e9) / b.a2_inf - 1.0), 1e-6);
        EXPECT_LE(std::abs(c_a2(p, 1e-9) / b.c_a2_zero - 1.0), 1e-6);
        EXPECT_LE(sqrt_c_a1(p, 1e-9), 1e-6);
        EXPECT_LE(sqrt_c_a1(p, 1e-8), 1e-3);
        EXPECT_TRUE(std::isfinite(a2(p, 1e200)));
        EXPECT_TRUE(std::isfinite(a1(p, 1e-200)));
    }
    const ModelParams p;
    const BridgeLimits b = bridge_limits(p);
    EXPECT_NEAR(benchmark_to(p, 1e-3, 0.0).upper - merton_fraction(p), b.a1_inf * 0.1, 1e-15);
}

TEST(Asymptotics, BenchmarkExpansions) {
    const ModelParams p;
    const double ym = merton_fraction(p);
    const auto to = benchmark_to(p, 1e-12, 0.3);
    EXPECT_NEAR(to.upper, ym, 1e-3);
    EXPECT_NEAR(to.lower, ym, 1e-3);
    EXPECT_NEAR(to.value, merton_value(p, 0.3), 1e-9);
    const auto so = benchmark_so(p, 1e12, 0.3);
    EXPECT_NEAR(so.target, ym, 1e-12);
    EXPECT_NEAR(so.value, merton_value(p, 0.3), 1e-12);
    ModelParams half = p;
    half.mu = 0.5 * half.gamma * half.sigma * half.sigma;
    EXPECT_EQ(benchmark_so(half, 3.0, 0.0).target, 0.5);
    EXPECT_THROW(benchmark_to(p, 0.0, 0.0), ValidationError);
    EXPECT_THROW(benchmark_so(p, 0.0, 0.0), ValidationError);
}

TEST(Asymptotics, JointPredictionForms) {
    const ModelParams p;
    for (double c : {0.1, 1.0, 10.0})
        for (double eps : {1e-2, 1e-4}) {
            const double lam = c * std::pow(eps, -2.0 / 3.0);
            const auto a = joint_prediction(p, c, eps, 0.25);
            const auto b = joint_prediction_lambda(p, lam, eps, 0.25);
            EXPECT_NEAR(a.upper, b.upper, 1e-14);
            EXPECT_NEAR(a.lower, b.lower, 1e-14);
            EXPECT_NEAR(a.value, b.value, 1e-14);
        }
    const auto z = joint_prediction(p, 1.0, 1e-15, 0.0);
    EXPECT_NEAR(z.upper, merton_fraction(p), 1e-4);
    EXPECT_NEAR(z.value, merton_value(p, 0.0), 1e-10);
    // fig-2 style prediction of the scaled value decrease
    const double pred = a2(p, 1.0) * merton_value(p, 0.75) * 0.25 * std::pow(1e-3, 2.0 / 3.0) / 0.1;
    const auto j = joint_prediction(p, 1.0, 1e-3, 0.75);
    EXPECT_NEAR((merton_value(p, 0.75) - j.value) / 0.1, pred, 1e-15);
}

TEST(Asymptotics, RequiresInteriorMerton) {
    ModelParams p;
    p.mu = 0.0;
    EXPECT_THROW(a1(p, 1.0), ValidationError);
    p.mu = 2.0;
    EXPECT_THROW(a2(p, 1.0), ValidationError);
    EXPECT_THROW(a1(ModelParams{}, 0.0), ValidationError);
}

TEST(Asymptotics, SweepRecordsAndErrors) {
    const ModelParams p;
    SweepOptions o;
    o.n_z = 1500;
    o.max_lambda_dt = 0.1;
    const auto recs = sweep(p, 1.0, {1e-2, 1.5}, 0.75, o);
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_TRUE(recs[0].ok);
    EXPECT_FALSE(recs[1].ok);
    EXPECT_FALSE(recs[1].error.empty());
    EXPECT_NEAR(recs[0].lambda, std::pow(1e-2, -2.0 / 3.0), 1e-12);
    EXPECT_NEAR(recs[0].width_ratio(), 1.0, 0.15);
    EXPECT_GT(recs[0].value_decrease, 0.0);
    EXPECT_NEAR(recs[0].value_decrease * 0.1, recs[0].raw_decrease, 1e-16);
    EXPECT_THROW(sweep(p, 1.0, {}, 0.75), ValidationError);
    std::ostringstream os;
    write_fig2_csv(os, recs, {"x=1"});
    EXPECT_NE(os.str().find("eps,lambda,width,predicted_width,decrease,predicted_decrease"), std::string::npos);
}

TEST(Asymptotics, LargerCMovesTowardCostOnlyWidth) {
    const ModelParams p;
    SweepOptions o;
    o.n_z = 2000;
    o.max_lambda_dt = 0.05;
    const double eps = 1e-3;
    const double to_width = 2 * bridge_limits(p).a1_inf * std::cbrt(eps);
    double prev = 1e300;
    for (double c : {0.1, 1.0, 10.0}) {
        const auto r = sweep_point(p, c, eps, 0.75, o);
        ASSERT_TRUE(r.ok) << r.error;
        const double gap = std::abs(r.width - to_width);
        EXPECT_LT(gap, prev);
        prev = gap;
    }
}

TEST(Asymptotics, Fig3Csv) {
    std::ostringstream os;
    write_fig3_csv(os, ModelParams{}, log_grid(0.1, 10, 3), {});
    const std::string out = os.str();
    EXPECT_EQ(std::count(out.begin(), out.end(), '\n'), 4);
    EXPECT_EQ(out.rfind("c,a1,a2,sqrt_c_a1,c_a2\n", 0), 0u);
}
