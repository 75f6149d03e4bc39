#pragma once

/// Rebalancing policies and exact Monte Carlo of terminal utility when
/// trades happen only at Poisson arrival times.
///
/// Paths draw their randomness from a per-path stream (see rng.hpp).
/// All policies passed to one call consume the same stream on each path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "illiq/io.hpp"
#include "illiq/model.hpp"
#include "illiq/no_trade.hpp"
#include "illiq/rng.hpp"

namespace illiq {

enum class PolicyKind { OptimalBand, FixedTarget, NoTrade };

struct Policy {
    PolicyKind kind = PolicyKind::NoTrade;
    double target = 0.0;                   // FixedTarget only
    const NoTradeRegion* region = nullptr; // OptimalBand only, not owned

    static Policy optimal_band(const NoTradeRegion& r) {
        if (r.levels() == 0) throw ValidationError("Policy: empty region");
        return {PolicyKind::OptimalBand, 0.0, &r};
    }
    static Policy fixed_target(double y) {
        if (!(y >= 0.0 && y <= 1.0)) throw ValidationError("Policy: fixed target must lie in [0,1]");
        return {PolicyKind::FixedTarget, y, nullptr};
    }
    static Policy no_trade() { return {}; }
};

inline std::string policy_name(const Policy& p) {
    switch (p.kind) {
        case PolicyKind::OptimalBand: return "optimal-band";
        case PolicyKind::FixedTarget: return "fixed-target";
        case PolicyKind::NoTrade: return "no-trade";
    }
    return "?";
}

inline double target_fraction(const Policy& pol, double t, double x) {
    switch (pol.kind) {
        case PolicyKind::NoTrade: return x;
        case PolicyKind::FixedTarget: return pol.target;
        case PolicyKind::OptimalBand: {
            const std::size_t k = pol.region->level_at_or_before(t);
            const double lo = pol.region->lower[k], hi = pol.region->upper[k];
            if (x < lo) return lo;
            if (x > hi) return hi;
            return x;
        }
    }
    return x;
}

/// Signed trade in wealth units that moves the risky fraction to y exactly
/// after costs.
inline double trade_amount(const PortfolioState& s, double y, const ModelParams& p) {
    if (!(y >= 0.0 && y <= 1.0)) throw ValidationError("trade_amount: target must lie in [0,1]");
    double m = 0.0;
    if (s.x <= y) m = s.w * (y - s.x) / (1.0 + p.eps_buy * y);
    else m = s.w * (y - s.x) / (1.0 - p.eps_sell * y);
    const auto [lo, hi] = rebalance_bounds(s, p);
    const double slack = 1e-12 * s.w;
    if (!(m >= lo - slack && m <= hi + slack)) throw NumericalError("trade_amount: trade outside admissible bounds");
    return m;
}

/// Proportional cost paid on a signed trade.
inline double trade_cost(double m, const ModelParams& p) {
    return m > 0.0 ? p.eps_buy * m : -p.eps_sell * m;
}

struct PolicyEvalResult {
    std::string policy;
    double mean_utility = 0.0;
    double std_error = 0.0;
    std::uint64_t n_paths = 0;
    double wealth_mean = 0.0;
    double wealth_variance = 0.0;
    double mean_trades = 0.0;
    std::uint64_t seed = 0;
    /// Paired statistics of (this - first policy) on common random numbers.
    double diff_vs_first = 0.0;
    double diff_std_error = 0.0;
};

struct SimOptions {
    unsigned threads = 0;  // 0: hardware concurrency
    /// If set, per-path rows (policy, path, terminal wealth, utility, trades) are written here.
    std::ostream* path_csv = nullptr;
};

namespace detail {

struct Moments {
    double n = 0.0, mean = 0.0, m2 = 0.0;
    void add(double x) {
        n += 1.0;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    void merge(const Moments& o) {
        if (o.n == 0.0) return;
        const double tot = n + o.n;
        const double d = o.mean - mean;
        mean += d * o.n / tot;
        m2 += o.m2 + d * d * n * o.n / tot;
        n = tot;
    }
    double variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }
};

struct PolicyStats {
    Moments utility, wealth, diff;
    double trades = 0.0;
    void merge(const PolicyStats& o) {
        utility.merge(o.utility);
        wealth.merge(o.wealth);
        diff.merge(o.diff);
        trades += o.trades;
    }
};

struct PathEvent {
    double t;
    double gauss;
};

struct PathRow {
    double wealth, utility;
    int trades;
};

inline constexpr std::uint64_t kBlock = 4096;

}  // namespace detail

/// Simulates every policy on the same paths.
inline std::vector<PolicyEvalResult> simulate_many(const ModelParams& p, const std::vector<Policy>& policies,
                                                   double x0, double w0, std::uint64_t n_paths, std::uint64_t seed,
                                                   const SimOptions& opt = {}) {
    p.validate();
    if (policies.empty()) throw ValidationError("simulate: no policies");
    if (!(w0 > 0.0)) throw ValidationError("simulate: w0 must be > 0");
    if (!(x0 >= 0.0 && x0 <= 1.0)) throw ValidationError("simulate: x0 must lie in [0,1]");
    if (n_paths < 2) throw ValidationError("simulate: n_paths must be >= 2");

    const std::size_t P = policies.size();
    const std::uint64_t n_blocks = (n_paths + detail::kBlock - 1) / detail::kBlock;
    std::vector<std::vector<detail::PolicyStats>> block_stats(n_blocks, std::vector<detail::PolicyStats>(P));
    std::vector<std::vector<detail::PathRow>> block_rows(opt.path_csv ? n_blocks : 0);

    const double drift = p.mu - p.sigma * p.sigma / 2.0;
    const double omg = p.one_minus_gamma();

    auto run_block = [&](std::uint64_t b) {
        auto& stats = block_stats[b];
        std::vector<detail::PathEvent> events;
        std::vector<double> util(P);
        const std::uint64_t first = b * detail::kBlock;
        const std::uint64_t last = std::min(n_paths, first + detail::kBlock);
        if (opt.path_csv) block_rows[b].reserve((last - first) * P);
        for (std::uint64_t path = first; path < last; ++path) {
            auto g = rng::path_stream(seed, path);
            events.clear();
            double t = 0.0;
            while (true) {
                const double tn = t + g.exponential(p.lambda);
                if (tn >= p.T) {
                    events.push_back({p.T, g.normal()});
                    break;
                }
                events.push_back({tn, g.normal()});
                t = tn;
            }
            for (std::size_t k = 0; k < P; ++k) {
                double stock = x0 * w0, cash = (1.0 - x0) * w0, tp = 0.0;
                int trades = 0;
                for (std::size_t e = 0; e < events.size(); ++e) {
                    const double dt = events[e].t - tp;
                    if (stock != 0.0) stock *= std::exp(drift * dt + p.sigma * std::sqrt(dt) * events[e].gauss);
                    tp = events[e].t;
                    if (e + 1 == events.size()) break;  // horizon, no trade
                    const double w = stock + cash;
                    const double x = std::clamp(stock / w, 0.0, 1.0);
                    const double y = target_fraction(policies[k], tp, x);
                    if (y == x) continue;
                    const double m = trade_amount({tp, x, w}, y, p);
                    const double cost = trade_cost(m, p);
                    stock += m;
                    cash -= m + cost;
                    // keep the edge targets exact under rounding
                    if (y == 0.0) stock = 0.0;
                    if (y == 1.0) cash = 0.0;
                    ++trades;
                }
                const double wT = stock + cash;
                util[k] = std::pow(wT, omg) / omg;
                stats[k].utility.add(util[k]);
                stats[k].wealth.add(wT);
                stats[k].trades += trades;
                if (opt.path_csv) block_rows[b].push_back({wT, util[k], trades});
            }
            for (std::size_t k = 0; k < P; ++k) stats[k].diff.add(util[k] - util[0]);
        }
    };

    unsigned nt = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    nt = static_cast<unsigned>(std::min<std::uint64_t>(nt, n_blocks));
    if (nt <= 1) {
        for (std::uint64_t b = 0; b < n_blocks; ++b) run_block(b);
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < nt; ++i)
            pool.emplace_back([&, i] {
                for (std::uint64_t b = i; b < n_blocks; b += nt) run_block(b);
            });
        for (auto& th : pool) th.join();
    }

    std::vector<detail::PolicyStats> tot(P);
    for (std::uint64_t b = 0; b < n_blocks; ++b)
        for (std::size_t k = 0; k < P; ++k) tot[k].merge(block_stats[b][k]);

    std::vector<PolicyEvalResult> out(P);
    const double n = static_cast<double>(n_paths);
    for (std::size_t k = 0; k < P; ++k) {
        auto& r = out[k];
        r.policy = policy_name(policies[k]);
        r.mean_utility = tot[k].utility.mean;
        r.std_error = std::sqrt(tot[k].utility.variance() / n);
        r.n_paths = n_paths;
        r.wealth_mean = tot[k].wealth.mean;
        r.wealth_variance = tot[k].wealth.variance();
        r.mean_trades = tot[k].trades / n;
        r.seed = seed;
        r.diff_vs_first = tot[k].diff.mean;
        r.diff_std_error = std::sqrt(tot[k].diff.variance() / n);
    }

    if (opt.path_csv) {
        auto& os = *opt.path_csv;
        os << "policy,path,terminal_wealth,utility,n_trades\n";
        for (std::uint64_t b = 0; b < n_blocks; ++b) {
            const auto& rows = block_rows[b];
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const std::uint64_t path = b * detail::kBlock + i / P;
                os << out[i % P].policy << ',' << path << ',' << fmt(rows[i].wealth) << ','
                   << fmt(rows[i].utility) << ',' << rows[i].trades << '\n';
            }
        }
    }
    return out;
}

inline PolicyEvalResult simulate(const ModelParams& p, const Policy& policy, double x0, double w0,
                                 std::uint64_t n_paths, std::uint64_t seed, const SimOptions& opt = {}) {
    return simulate_many(p, {policy}, x0, w0, n_paths, seed, opt).front();
}

}  // namespace illiq
