#pragma once

/// Command implementations behind the illiq CLI. Each command reads a
/// resolved RunConfig, writes its artifacts under config.output_dir and
/// returns the list of files written. Errors propagate as ValidationError
/// or NumericalError; run_command maps them to exit codes 1 and 2.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "illiq/asymptotics.hpp"
#include "illiq/config.hpp"
#include "illiq/fk_oracle.hpp"
#include "illiq/grid.hpp"
#include "illiq/hjb_solver.hpp"
#include "illiq/io.hpp"
#include "illiq/model.hpp"
#include "illiq/no_trade.hpp"
#include "illiq/policy_sim.hpp"

namespace illiq {

using Json = nlohmann::ordered_json;

namespace detail {

inline std::vector<std::string> header_for(const RunConfig& c, const std::string& command) {
    auto h = c.echo();
    h.insert(h.begin() + 1, "command=" + command);
    return h;
}

inline Json json_base(const RunConfig& c, const std::string& command) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = command;
    Json cfg = Json::object();
    for (const auto& [k, v] : c.entries) cfg[k] = v;
    j["config"] = cfg;
    return j;
}

inline std::filesystem::path out_path(const RunConfig& c, const std::string& name) {
    std::filesystem::create_directories(c.output_dir);
    return std::filesystem::path(c.output_dir) / name;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ValidationError("cannot write '" + p.string() + "'");
    return os;
}

inline void write_json(const std::filesystem::path& p, const Json& j) {
    auto os = open_out(p);
    os << j.dump(2) << '\n';
}

}  // namespace detail

inline Solution solve_config(const RunConfig& c) {
    SolverOptions o;
    o.n_t = c.n_t;
    o.max_lambda_dt = c.max_lambda_dt;
    o.max_stored_levels = c.max_stored_levels;
    return solve(c.model, SpatialGrid(c.z_min, c.z_max, c.n_z), o);
}

inline std::vector<std::string> region_header(const RunConfig& c, const std::string& command, const Solution& s) {
    auto h = detail::header_for(c, command);
    const ThresholdTimes tt = threshold_times(c.model, s.region);
    h.push_back("t_lower=" + fmt(tt.t_lower));
    h.push_back("t_upper=" + fmt(tt.t_upper));
    h.push_back("t_lower_integral=" + fmt(tt.t_lower_integral));
    h.push_back("t_upper_integral=" + fmt(tt.t_upper_integral));
    return h;
}

inline std::vector<std::string> cmd_solve(const RunConfig& c) {
    std::vector<std::string> files;
    const Solution s = solve_config(c);
    {
        const auto p = detail::out_path(c, "surface.csv");
        auto os = detail::open_out(p);
        auto h = detail::header_for(c, "solve");
        h.push_back("dt=" + fmt(s.surface.dt()) + " n_t=" + std::to_string(s.n_t));
        write_surface_csv(os, s.surface, h, c.surface_time_stride, c.surface_x_stride);
        files.push_back(p.string());
    }
    const double ym = merton_fraction(c.model);
    const ThresholdTimes tt = threshold_times(c.model, s.region);
    const std::size_t K = s.region.levels() - 1;
    Json j = detail::json_base(c, "solve");
    j["n_t"] = s.n_t;
    j["dt"] = s.surface.dt();
    if (ym > 0.0 && ym < 1.0) {
        j["merton_fraction"] = ym;
        j["v_at_merton"] = s.surface.value_at(0.0, ym);
    }
    j["merton_value"] = merton_value(c.model, 0.0);
    j["y_lower_0"] = s.region.lower[K];
    j["y_upper_0"] = s.region.upper[K];
    j["t_lower"] = tt.t_lower;
    j["t_upper"] = tt.t_upper;
    j["t_lower_integral"] = tt.t_lower_integral;
    j["t_upper_integral"] = tt.t_upper_integral;
    if (c.fk_points > 0) {
        const auto rows = fk_compare(s, c.fk_points, c.fk_seed);
        double mx = 0.0;
        for (const auto& r : rows) mx = std::max(mx, r.rel_err);
        j["fk_max_rel_err"] = mx;
        const auto p = detail::out_path(c, "fk_check.csv");
        auto os = detail::open_out(p);
        write_fk_csv(os, rows, detail::header_for(c, "solve"));
        files.push_back(p.string());
    }
    const auto p = detail::out_path(c, "summary.json");
    detail::write_json(p, j);
    files.push_back(p.string());
    return files;
}

inline std::vector<std::string> cmd_region(const RunConfig& c) {
    const Solution s = solve_config(c);
    const auto p = detail::out_path(c, "region.csv");
    auto os = detail::open_out(p);
    write_region_csv(os, s.region, region_header(c, "region", s));
    return {p.string()};
}

inline Json result_json(const PolicyEvalResult& r) {
    Json j;
    j["policy"] = r.policy;
    j["mean_utility"] = r.mean_utility;
    j["std_error"] = r.std_error;
    j["n_paths"] = r.n_paths;
    j["terminal_wealth_mean"] = r.wealth_mean;
    j["terminal_wealth_variance"] = r.wealth_variance;
    j["mean_trades"] = r.mean_trades;
    j["seed"] = r.seed;
    j["diff_vs_optimal_band"] = r.diff_vs_first;
    j["diff_std_error"] = r.diff_std_error;
    return j;
}

inline std::vector<std::string> cmd_simulate(const RunConfig& c) {
    std::vector<std::string> files;
    const Solution s = solve_config(c);
    const double ym = std::clamp(merton_fraction(c.model), 0.0, 1.0);
    const std::vector<Policy> pols{Policy::optimal_band(s.region), Policy::no_trade(), Policy::fixed_target(ym)};
    SimOptions so;
    so.threads = c.threads;
    std::ofstream paths;
    if (c.paths_csv) {
        const auto p = detail::out_path(c, "paths.csv");
        paths = detail::open_out(p);
        write_comment_header(paths, detail::header_for(c, "simulate"));
        so.path_csv = &paths;
        files.push_back(p.string());
    }
    const auto res = simulate_many(c.model, pols, c.x0, c.w0, c.n_paths, c.seed, so);
    Json j = detail::json_base(c, "simulate");
    j["x0"] = c.x0;
    j["w0"] = c.w0;
    j["pde_expected_utility"] = utility(c.model, c.w0) * s.surface.value_at(0.0, c.x0);
    Json arr = Json::array();
    for (const auto& r : res) arr.push_back(result_json(r));
    j["results"] = arr;
    const auto p = detail::out_path(c, "simulate.json");
    detail::write_json(p, j);
    files.push_back(p.string());
    return files;
}

inline Json prediction_json(const AsymptoticPrediction& a) {
    Json j;
    j["y_upper"] = a.upper;
    j["y_lower"] = a.lower;
    j["v_at_merton"] = a.value;
    return j;
}

inline std::vector<std::string> cmd_asymptotics(const RunConfig& c) {
    const ModelParams& m = c.model;
    const double cc = c.asym_c, eps = c.asym_eps, t = c.asym_t;
    const double lam = cc * std::pow(eps, -2.0 / 3.0);
    const BridgeLimits b = bridge_limits(m);
    Json j = detail::json_base(c, "asymptotics");
    j["c"] = cc;
    j["a1"] = a1(m, cc);
    j["a2"] = a2(m, cc);
    j["sqrt_c_a1"] = sqrt_c_a1(m, cc);
    j["c_a2"] = c_a2(m, cc);
    Json lim;
    lim["a1_c_to_inf"] = b.a1_inf;
    lim["a2_c_to_inf"] = b.a2_inf;
    lim["sqrt_c_a1_c_to_0"] = b.sqrt_c_a1_zero;
    lim["c_a2_c_to_0"] = b.c_a2_zero;
    j["limits"] = lim;
    Json probe;
    probe["a1_at_1e9"] = a1(m, 1e9);
    probe["a2_at_1e9"] = a2(m, 1e9);
    probe["sqrt_c_a1_at_1e-9"] = sqrt_c_a1(m, 1e-9);
    probe["c_a2_at_1e-9"] = c_a2(m, 1e-9);
    j["limit_probes"] = probe;
    j["eps"] = eps;
    j["lambda"] = lam;
    j["t"] = t;
    j["joint_prediction"] = prediction_json(joint_prediction(m, cc, eps, t));
    j["benchmark_transaction_costs_only"] = prediction_json(benchmark_to(m, eps, t));
    const SearchOnlyPrediction so = benchmark_so(m, lam, t);
    j["benchmark_search_only"] = Json{{"target", so.target}, {"v_at_merton", so.value}};
    const auto p = detail::out_path(c, "asymptotics.json");
    detail::write_json(p, j);
    return {p.string()};
}

inline SweepOptions sweep_options(const RunConfig& c) {
    SweepOptions o;
    o.z_min = c.z_min;
    o.z_max = c.z_max;
    o.n_z = c.n_z;
    o.max_lambda_dt = c.sweep_max_lambda_dt;
    return o;
}

/// Returns true if every sweep entry succeeded.
inline bool write_sweep(const RunConfig& c, const std::string& command, const std::string& name,
                        std::vector<std::string>& files) {
    const auto recs = sweep(c.model, c.sweep_c, c.eps_list, c.sweep_t, sweep_options(c));
    const auto p = detail::out_path(c, name);
    auto os = detail::open_out(p);
    write_fig2_csv(os, recs, detail::header_for(c, command));
    files.push_back(p.string());
    return std::all_of(recs.begin(), recs.end(), [](const SweepRecord& r) { return r.ok; });
}

inline std::vector<std::string> cmd_sweep(const RunConfig& c) {
    std::vector<std::string> files;
    if (!write_sweep(c, "sweep", "fig2.csv", files))
        throw NumericalError("sweep: at least one entry failed; see the status column of " + files.back());
    return files;
}

inline std::vector<std::string> cmd_figures(const RunConfig& c) {
    std::vector<std::string> files;
    bool ok = true;
    if (c.fig1) {
        const Solution s = solve_config(c);
        const auto p = detail::out_path(c, "fig1_region.csv");
        auto os = detail::open_out(p);
        write_region_csv(os, s.region, region_header(c, "figures", s));
        files.push_back(p.string());
    }
    if (c.fig2) ok = write_sweep(c, "figures", "fig2.csv", files);
    if (c.fig3) {
        const auto p = detail::out_path(c, "fig3.csv");
        auto os = detail::open_out(p);
        write_fig3_csv(os, c.model, log_grid(c.c_min, c.c_max, c.n_c), detail::header_for(c, "figures"));
        files.push_back(p.string());
    }
    if (!ok) throw NumericalError("figures: a sweep entry failed; see the status column of fig2.csv");
    return files;
}

/// Dispatches a command and maps errors to exit codes (0 ok, 1 validation, 2 numerical).
inline int run_command(const std::string& name, const RunConfig& c, std::ostream& log) {
    try {
        std::vector<std::string> files;
        if (name == "solve") files = cmd_solve(c);
        else if (name == "region") files = cmd_region(c);
        else if (name == "simulate") files = cmd_simulate(c);
        else if (name == "asymptotics") files = cmd_asymptotics(c);
        else if (name == "sweep") files = cmd_sweep(c);
        else if (name == "figures") files = cmd_figures(c);
        else throw ValidationError("unknown command '" + name + "'");
        for (const auto& f : files) log << "wrote " << f << '\n';
        return 0;
    } catch (const ValidationError& e) {
        log << "validation error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        log << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        log << "validation error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace illiq
