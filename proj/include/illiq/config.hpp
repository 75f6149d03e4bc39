#pragma once

/// Run configuration: a flat key=value text file with dotted sections.
///
///   # comment
///   model.mu = 0.2
///   sweep.eps_list = 0.01, 0.003, 0.001
///
/// Every key has a default (see kConfigKeys); unknown or repeated keys are
/// rejected.

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "illiq/io.hpp"
#include "illiq/model.hpp"

namespace illiq {

struct ConfigKey {
    std::string_view key;
    std::string_view default_value;
    std::string_view doc;
};

inline constexpr std::array kConfigKeys = {
    ConfigKey{"model.mu", "0.2", "stock drift"},
    ConfigKey{"model.sigma", "1", "volatility"},
    ConfigKey{"model.gamma", "0.9", "relative risk aversion (> 0, != 1)"},
    ConfigKey{"model.T", "1", "horizon"},
    ConfigKey{"model.eps_buy", "0.05", "proportional buy cost"},
    ConfigKey{"model.eps_sell", "0.05", "proportional sell cost"},
    ConfigKey{"model.lambda", "3", "trading-opportunity intensity"},
    ConfigKey{"solver.n_z", "4000", "interior logit nodes"},
    ConfigKey{"solver.n_t", "2000", "time steps (raised until lambda*dt <= solver.max_lambda_dt)"},
    ConfigKey{"solver.z_min", "-12", "lower logit bound"},
    ConfigKey{"solver.z_max", "12", "upper logit bound"},
    ConfigKey{"solver.max_lambda_dt", "0.1", "cap on lambda*dt"},
    ConfigKey{"solver.max_stored_levels", "2001", "time levels kept in memory for the surface"},
    ConfigKey{"solve.fk_points", "0", "random (t,x) points checked against the quadrature oracle"},
    ConfigKey{"solve.fk_seed", "7", "seed for the oracle check points"},
    ConfigKey{"sweep.c", "1", "curve parameter in lambda = c eps^(-2/3)"},
    ConfigKey{"sweep.eps_list", "0.01,0.003,0.001", "comma-separated costs"},
    ConfigKey{"sweep.t_eval", "0.75", "evaluation time"},
    ConfigKey{"sweep.max_lambda_dt", "0.02", "cap on lambda*dt for sweep solves"},
    ConfigKey{"simulate.n_paths", "100000", "Monte Carlo paths"},
    ConfigKey{"simulate.seed", "42", "base seed"},
    ConfigKey{"simulate.x0", "merton", "initial risky fraction, or 'merton'"},
    ConfigKey{"simulate.w0", "1", "initial wealth"},
    ConfigKey{"simulate.threads", "0", "worker threads, 0 = hardware concurrency"},
    ConfigKey{"simulate.paths_csv", "false", "also write per-path rows"},
    ConfigKey{"asymptotics.c", "1", "curve parameter"},
    ConfigKey{"asymptotics.eps", "0.001", "cost used for the benchmark expansions"},
    ConfigKey{"asymptotics.t", "0", "evaluation time for the expansions"},
    ConfigKey{"figures.which", "fig1,fig2,fig3", "subset of fig1, fig2, fig3"},
    ConfigKey{"figures.c_min", "0.001", "fig3 c range, lower end"},
    ConfigKey{"figures.c_max", "1000", "fig3 c range, upper end"},
    ConfigKey{"figures.n_c", "121", "fig3 grid points (log-spaced)"},
    ConfigKey{"output.dir", "out", "output directory"},
    ConfigKey{"output.surface_time_stride", "20", "write every k-th stored level of the surface"},
    ConfigKey{"output.surface_x_stride", "8", "write every k-th node of the surface"},
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
    if (v.empty()) throw ValidationError("config: " + key + " is empty");
    errno = 0;
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (*end != '\0' || errno == ERANGE || !std::isfinite(d))
        throw ValidationError("config: " + key + " is not a finite number: '" + v + "'");
    return d;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw ValidationError("config: " + key + " is not a non-negative integer: '" + v + "'");
    errno = 0;
    const unsigned long long u = std::strtoull(v.c_str(), nullptr, 10);
    if (errno == ERANGE) throw ValidationError("config: " + key + " out of range");
    return u;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ValidationError("config: " + key + " must be true or false");
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

struct RunConfig {
    ModelParams model;
    std::size_t n_z = 4000, n_t = 2000, max_stored_levels = 2001;
    double z_min = -12.0, z_max = 12.0, max_lambda_dt = 0.1;
    std::size_t fk_points = 0;
    std::uint64_t fk_seed = 7;
    double sweep_c = 1.0, sweep_t = 0.75, sweep_max_lambda_dt = 0.02;
    std::vector<double> eps_list;
    std::uint64_t n_paths = 100000, seed = 42;
    bool x0_merton = true;
    double x0 = 0.0, w0 = 1.0;
    unsigned threads = 0;
    bool paths_csv = false;
    double asym_c = 1.0, asym_eps = 1e-3, asym_t = 0.0;
    bool fig1 = true, fig2 = true, fig3 = true;
    double c_min = 1e-3, c_max = 1e3;
    std::size_t n_c = 121;
    std::string output_dir = "out";
    std::size_t surface_time_stride = 20, surface_x_stride = 8;

    /// Resolved key=value pairs in declaration order.
    std::vector<std::pair<std::string, std::string>> entries;

    /// "key=value" lines for output headers.
    std::vector<std::string> echo() const {
        std::vector<std::string> out;
        out.push_back("schema_version=" + std::to_string(kSchemaVersion));
        for (const auto& [k, v] : entries) out.push_back(k + "=" + v);
        return out;
    }

    /// Replaces one key's value (command-line overrides) and re-resolves.
    void set(const std::string& key, const std::string& value);
};

namespace detail {

inline void resolve(RunConfig& c) {
    std::map<std::string, std::string> m(c.entries.begin(), c.entries.end());
    auto d = [&](const char* k) { return parse_double(k, m.at(k)); };
    auto u = [&](const char* k) { return parse_u64(k, m.at(k)); };

    c.model.mu = d("model.mu");
    c.model.sigma = d("model.sigma");
    c.model.gamma = d("model.gamma");
    c.model.T = d("model.T");
    c.model.eps_buy = d("model.eps_buy");
    c.model.eps_sell = d("model.eps_sell");
    c.model.lambda = d("model.lambda");
    c.model.validate();

    c.n_z = u("solver.n_z");
    c.n_t = u("solver.n_t");
    c.z_min = d("solver.z_min");
    c.z_max = d("solver.z_max");
    c.max_lambda_dt = d("solver.max_lambda_dt");
    c.max_stored_levels = u("solver.max_stored_levels");
    if (c.n_z < 3) throw ValidationError("config: solver.n_z must be >= 3");
    if (c.n_t < 1) throw ValidationError("config: solver.n_t must be >= 1");
    if (!(c.z_min < c.z_max)) throw ValidationError("config: solver.z_min must be < solver.z_max");
    if (!(c.max_lambda_dt > 0.0)) throw ValidationError("config: solver.max_lambda_dt must be > 0");
    if (c.max_stored_levels < 2) throw ValidationError("config: solver.max_stored_levels must be >= 2");

    c.fk_points = u("solve.fk_points");
    c.fk_seed = u("solve.fk_seed");

    c.sweep_c = d("sweep.c");
    c.sweep_t = d("sweep.t_eval");
    c.sweep_max_lambda_dt = d("sweep.max_lambda_dt");
    c.eps_list.clear();
    for (const auto& s : split_list(m.at("sweep.eps_list"))) c.eps_list.push_back(parse_double("sweep.eps_list", s));
    if (c.eps_list.empty()) throw ValidationError("config: sweep.eps_list is empty");
    for (double e : c.eps_list)
        if (!(e > 0.0 && e < 1.0)) throw ValidationError("config: sweep.eps_list entries must lie in (0,1)");
    if (!(c.sweep_c > 0.0)) throw ValidationError("config: sweep.c must be > 0");
    if (!(c.sweep_t >= 0.0 && c.sweep_t < c.model.T)) throw ValidationError("config: sweep.t_eval must lie in [0,T)");
    if (!(c.sweep_max_lambda_dt > 0.0)) throw ValidationError("config: sweep.max_lambda_dt must be > 0");

    c.n_paths = u("simulate.n_paths");
    c.seed = u("simulate.seed");
    c.x0_merton = m.at("simulate.x0") == "merton";
    c.x0 = c.x0_merton ? merton_fraction(c.model) : d("simulate.x0");
    c.w0 = d("simulate.w0");
    c.threads = static_cast<unsigned>(u("simulate.threads"));
    c.paths_csv = parse_bool("simulate.paths_csv", m.at("simulate.paths_csv"));
    if (c.n_paths < 2) throw ValidationError("config: simulate.n_paths must be >= 2");
    if (!(c.x0 >= 0.0 && c.x0 <= 1.0)) throw ValidationError("config: simulate.x0 must lie in [0,1]");
    if (!(c.w0 > 0.0)) throw ValidationError("config: simulate.w0 must be > 0");

    c.asym_c = d("asymptotics.c");
    c.asym_eps = d("asymptotics.eps");
    c.asym_t = d("asymptotics.t");
    if (!(c.asym_c > 0.0)) throw ValidationError("config: asymptotics.c must be > 0");
    if (!(c.asym_eps > 0.0 && c.asym_eps < 1.0)) throw ValidationError("config: asymptotics.eps must lie in (0,1)");
    if (!(c.asym_t >= 0.0 && c.asym_t <= c.model.T)) throw ValidationError("config: asymptotics.t must lie in [0,T]");

    c.fig1 = c.fig2 = c.fig3 = false;
    for (const auto& f : split_list(m.at("figures.which"))) {
        if (f == "fig1") c.fig1 = true;
        else if (f == "fig2") c.fig2 = true;
        else if (f == "fig3") c.fig3 = true;
        else throw ValidationError("config: figures.which has unknown entry '" + f + "'");
    }
    c.c_min = d("figures.c_min");
    c.c_max = d("figures.c_max");
    c.n_c = u("figures.n_c");
    if (!(c.c_min > 0.0 && c.c_max > c.c_min)) throw ValidationError("config: need 0 < figures.c_min < figures.c_max");
    if (c.n_c < 2) throw ValidationError("config: figures.n_c must be >= 2");

    c.output_dir = m.at("output.dir");
    if (c.output_dir.empty()) throw ValidationError("config: output.dir is empty");
    c.surface_time_stride = u("output.surface_time_stride");
    c.surface_x_stride = u("output.surface_x_stride");
    if (c.surface_time_stride == 0 || c.surface_x_stride == 0)
        throw ValidationError("config: surface strides must be >= 1");
}

}  // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.first == key; });
    if (it == entries.end()) throw ValidationError("config: unknown key '" + key + "'");
    it->second = value;
    detail::resolve(*this);
}

/// Parses config text; keys not present keep their defaults.
inline RunConfig parse_config(std::istream& in) {
    RunConfig c;
    for (const auto& k : kConfigKeys) c.entries.emplace_back(std::string(k.key), std::string(k.default_value));
    std::vector<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string val = detail::trim(std::string_view(line).substr(eq + 1));
        auto it = std::find_if(c.entries.begin(), c.entries.end(), [&](const auto& e) { return e.first == key; });
        if (it == c.entries.end())
            throw ValidationError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            throw ValidationError("config line " + std::to_string(lineno) + ": repeated key '" + key + "'");
        seen.push_back(key);
        it->second = val;
    }
    detail::resolve(c);
    return c;
}

inline RunConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open '" + path + "'");
    return parse_config(in);
}

}  // namespace illiq
