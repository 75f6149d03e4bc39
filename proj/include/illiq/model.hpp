#pragma once

/// Market, preference and friction parameters for power-utility investment
/// with proportional costs and Poisson-timed trading, plus the closed-form
/// quantities every other module consumes.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace illiq {

/// Raised for invalid inputs (parameters, configs, queries out of domain).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure fails (NaN, bound violations, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModelParams {
    double mu = 0.2;
    double sigma = 1.0;
    double gamma = 0.9;
    double T = 1.0;
    double eps_buy = 0.05;
    double eps_sell = 0.05;
    double lambda = 3.0;

    /// Throws ValidationError on any violated invariant.
    void validate() const {
        auto fail = [](const std::string& what) { throw ValidationError("ModelParams: " + what); };
        if (!std::isfinite(mu)) fail("mu must be finite");
        if (!(sigma > 0.0) || !std::isfinite(sigma)) fail("sigma must be > 0");
        if (!(gamma > 0.0) || !std::isfinite(gamma)) fail("gamma must be > 0");
        // log utility is a different model
        if (std::abs(gamma - 1.0) < 1e-3) fail("|gamma - 1| must be >= 1e-3");
        if (!(T > 0.0) || !std::isfinite(T)) fail("T must be > 0");
        if (!(lambda > 0.0) || !std::isfinite(lambda)) fail("lambda must be > 0");
        if (!(eps_buy >= 0.0) || eps_buy > 10.0) fail("eps_buy must lie in [0, 10]");
        if (!(eps_sell >= 0.0) || !(eps_sell < 1.0)) fail("eps_sell must lie in [0, 1)");
    }

    /// 1 - gamma, the utility exponent.
    double one_minus_gamma() const { return 1.0 - gamma; }
};

/// Validated, immutable parameter bundle.
inline ModelParams make_params(double mu, double sigma, double gamma, double T,
                               double eps_buy, double eps_sell, double lambda) {
    ModelParams p{mu, sigma, gamma, T, eps_buy, eps_sell, lambda};
    p.validate();
    return p;
}

struct PortfolioState {
    double t = 0.0;
    double x = 0.0;  // risky fraction of total wealth
    double w = 1.0;  // total wealth

    void validate(const ModelParams& p) const {
        if (!(t >= 0.0 && t <= p.T)) throw ValidationError("PortfolioState: t outside [0,T]");
        if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("PortfolioState: x outside [0,1]");
        if (!(w > 0.0)) throw ValidationError("PortfolioState: w must be > 0");
    }
};

/// mu / (gamma sigma^2); not clamped to [0,1].
inline double merton_fraction(const ModelParams& p) {
    return p.mu / (p.gamma * p.sigma * p.sigma);
}

/// Q(x) = -g(1-g)s^2 (x-yM)^2/2 + g(1-g)s^2 yM^2/2.
inline double q_of(const ModelParams& p, double x) {
    const double ym = merton_fraction(p);
    const double k = p.gamma * (1.0 - p.gamma) * p.sigma * p.sigma / 2.0;
    return -k * (x - ym) * (x - ym) + k * ym * ym;
}

/// max over [0,1] of |Q|.
inline double q_sup_norm(const ModelParams& p) {
    const double ym = merton_fraction(p);
    double m = std::max(std::abs(q_of(p, 0.0)), std::abs(q_of(p, 1.0)));
    if (ym > 0.0 && ym < 1.0) m = std::max(m, std::abs(q_of(p, ym)));
    return m;
}

/// Frictionless value v0(t) = exp(Q(yM)(T-t)).
inline double merton_value(const ModelParams& p, double t) {
    return std::exp(q_of(p, merton_fraction(p)) * (p.T - t));
}

/// Lower/upper bounds on v that hold for every friction level.
inline std::pair<double, double> value_bounds(const ModelParams& p) {
    const double qn = q_sup_norm(p);
    const double drift = std::abs((1.0 - p.gamma) * (p.mu - p.gamma * p.sigma * p.sigma / 2.0) * p.T);
    if (p.gamma < 1.0) return {std::exp(-drift), std::exp(qn * p.T)};
    return {std::exp(-qn * p.T), 1.0 + std::exp(drift)};
}

/// Admissible trade interval [-W1, W0/(1+eps_buy)] in wealth units.
inline std::pair<double, double> rebalance_bounds(const PortfolioState& s, const ModelParams& p) {
    const double stock = s.x * s.w;
    const double cash = (1.0 - s.x) * s.w;
    return {-stock, cash / (1.0 + p.eps_buy)};
}

/// Power utility w^(1-g)/(1-g).
inline double utility(const ModelParams& p, double w) {
    return std::pow(w, 1.0 - p.gamma) / (1.0 - p.gamma);
}

}  // namespace illiq
