#pragma once

/// Logit-space spatial grid and the discretized value surface v(t, x).
///
/// Interior nodes i = 1..n_z sit on a uniform grid in z = logit(x) over
/// [z_min, z_max]. Node 0 carries x = 0 and node n_z + 1 carries x = 1; they
/// are not on the z lattice. For the z-stencil of the outermost interior
/// nodes a ghost value is reconstructed from the endpoint node using the
/// exponential decay v(h(z)) - v(0) ~ e^z (resp. e^-z at the top).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "illiq/model.hpp"

namespace illiq {

inline double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double logit(double x) { return std::log(x / (1.0 - x)); }

class SpatialGrid {
public:
    SpatialGrid(double z_min, double z_max, std::size_t n_z)
        : z_min_(z_min), z_max_(z_max), n_z_(n_z) {
        if (!(z_min < z_max)) throw ValidationError("SpatialGrid: z_min must be < z_max");
        if (n_z < 3) throw ValidationError("SpatialGrid: n_z must be >= 3");
        dz_ = (z_max - z_min) / static_cast<double>(n_z - 1);
        ghost_decay_ = std::exp(-dz_);
        z_.resize(n_z + 2);
        x_.resize(n_z + 2);
        z_.front() = -std::numeric_limits<double>::infinity();
        z_.back() = std::numeric_limits<double>::infinity();
        x_.front() = 0.0;
        x_.back() = 1.0;
        for (std::size_t i = 1; i <= n_z; ++i) {
            z_[i] = z_min + static_cast<double>(i - 1) * dz_;
            x_[i] = logistic(z_[i]);
        }
    }

    /// Throws unless logit(y_M) lies strictly inside (z_min, z_max).
    void check_covers_merton(const ModelParams& p) const {
        const double ym = merton_fraction(p);
        if (!(ym > 0.0 && ym < 1.0)) return;
        const double zm = logit(ym);
        if (!(zm > z_min_ && zm < z_max_))
            throw ValidationError("SpatialGrid: logit(y_M) outside (z_min, z_max)");
    }

    double z_min() const { return z_min_; }
    double z_max() const { return z_max_; }
    double dz() const { return dz_; }
    std::size_t n_z() const { return n_z_; }
    /// Total node count including the x = 0 and x = 1 nodes.
    std::size_t size() const { return n_z_ + 2; }
    double ghost_decay() const { return ghost_decay_; }
    std::span<const double> z() const { return z_; }
    std::span<const double> x() const { return x_; }
    double x(std::size_t i) const { return x_[i]; }
    double z(std::size_t i) const { return z_[i]; }

    /// Segment [j, j+1] containing x and the interpolation weight of node j+1.
    /// Interior segments interpolate linearly in z, the two edge segments
    /// (touching x = 0 or x = 1) linearly in x.
    std::pair<std::size_t, double> locate(double x) const {
        if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("SpatialGrid: x outside [0,1]");
        if (x <= x_[1]) return {0, x / x_[1]};
        if (x >= x_[n_z_]) return {n_z_, (x - x_[n_z_]) / (1.0 - x_[n_z_])};
        const double s = (logit(x) - z_min_) / dz_;
        auto j = static_cast<std::size_t>(std::floor(s)) + 1;
        j = std::clamp<std::size_t>(j, 1, n_z_ - 1);
        double w = s - static_cast<double>(j - 1);
        w = std::clamp(w, 0.0, 1.0);
        return {j, w};
    }

private:
    double z_min_, z_max_;
    std::size_t n_z_;
    double dz_ = 0.0;
    double ghost_decay_ = 0.0;
    std::vector<double> z_, x_;
};

/// Read-only view of one time level of v over all grid nodes.
class SliceView {
public:
    SliceView(const SpatialGrid& grid, std::span<const double> v) : grid_(&grid), v_(v) {}

    const SpatialGrid& grid() const { return *grid_; }
    std::span<const double> values() const { return v_; }
    double operator[](std::size_t i) const { return v_[i]; }

    /// z-neighbours of interior node i, with reconstructed ghosts at the edges.
    double left_neighbor(std::size_t i) const {
        if (i > 1) return v_[i - 1];
        const double q = grid_->ghost_decay();
        return v_[0] + q * (v_[1] - v_[0]);
    }
    double right_neighbor(std::size_t i) const {
        const std::size_t n = grid_->n_z();
        if (i < n) return v_[i + 1];
        const double q = grid_->ghost_decay();
        return v_[n + 1] + q * (v_[n] - v_[n + 1]);
    }

    /// v_z at interior node i (centered).
    double dz_node(std::size_t i) const {
        return (right_neighbor(i) - left_neighbor(i)) / (2.0 * grid_->dz());
    }

    /// v_x at node i: centered in z plus chain rule at interior nodes,
    /// one-sided in x at the endpoint nodes.
    double dx_node(std::size_t i) const {
        const auto& g = *grid_;
        const std::size_t n = g.n_z();
        if (i == 0) return (v_[1] - v_[0]) / g.x(1);
        if (i == n + 1) return (v_[n + 1] - v_[n]) / (1.0 - g.x(n));
        const double x = g.x(i);
        return dz_node(i) / (x * (1.0 - x));
    }

    /// v_xx at interior node i from centered z-differences. Loses accuracy
    /// where x(1-x) approaches the rounding level of v.
    double dxx_node(std::size_t i) const {
        const auto& g = *grid_;
        const std::size_t n = g.n_z();
        if (i == 0) i = 1;
        if (i == n + 1) i = n;
        const double x = g.x(i);
        const double h = g.dz();
        const double vzz = (right_neighbor(i) - 2.0 * v_[i] + left_neighbor(i)) / (h * h);
        const double vz = dz_node(i);
        const double s = x * (1.0 - x);
        return (vzz - (1.0 - 2.0 * x) * vz) / (s * s);
    }

    double value(double x) const {
        auto [j, w] = grid_->locate(x);
        return (1.0 - w) * v_[j] + w * v_[j + 1];
    }
    double dx(double x) const {
        auto [j, w] = grid_->locate(x);
        return (1.0 - w) * dx_node(j) + w * dx_node(j + 1);
    }
    double dxx(double x) const {
        auto [j, w] = grid_->locate(x);
        return (1.0 - w) * dxx_node(j) + w * dxx_node(j + 1);
    }

private:
    const SpatialGrid* grid_;
    std::span<const double> v_;
};

/// Discretized v on stored time levels, t decreasing from T to 0.
class ValueSurface {
public:
    ValueSurface(ModelParams params, SpatialGrid grid, double dt)
        : params_(params), grid_(std::move(grid)), dt_(dt) {}

    void append_level(double t, std::span<const double> row) {
        if (row.size() != grid_.size()) throw ValidationError("ValueSurface: row size mismatch");
        if (!times_.empty() && !(t < times_.back()))
            throw ValidationError("ValueSurface: levels must have decreasing t");
        times_.push_back(t);
        values_.insert(values_.end(), row.begin(), row.end());
    }

    const ModelParams& params() const { return params_; }
    const SpatialGrid& grid() const { return grid_; }
    /// Solver time step (stored levels may be a subsample of solver levels).
    double dt() const { return dt_; }
    std::span<const double> times() const { return times_; }
    std::size_t levels() const { return times_.size(); }

    std::span<const double> row(std::size_t k) const {
        return {values_.data() + k * grid_.size(), grid_.size()};
    }
    SliceView slice(std::size_t k) const { return {grid_, row(k)}; }

    /// Stored levels k, k+1 bracketing t and the weight of level k+1.
    std::pair<std::size_t, double> bracket(double t) const {
        if (times_.size() < 2) throw NumericalError("ValueSurface: fewer than two levels");
        const double tol = 1e-12 * params_.T;
        if (!(t <= times_.front() + tol && t >= times_.back() - tol))
            throw ValidationError("ValueSurface: t outside [0,T]");
        // times_ decreasing
        auto it = std::lower_bound(times_.begin(), times_.end(), t, std::greater<double>());
        std::size_t k1 = static_cast<std::size_t>(it - times_.begin());
        if (k1 == 0) return {0, 0.0};
        if (k1 >= times_.size()) return {times_.size() - 2, 1.0};
        const std::size_t k0 = k1 - 1;
        const double w = (times_[k0] - t) / (times_[k0] - times_[k1]);
        return {k0, std::clamp(w, 0.0, 1.0)};
    }

    double value_at(double t, double x) const {
        auto [k, w] = bracket(t);
        return (1.0 - w) * slice(k).value(x) + w * slice(k + 1).value(x);
    }
    double deriv_x_at(double t, double x) const {
        auto [k, w] = bracket(t);
        return (1.0 - w) * slice(k).dx(x) + w * slice(k + 1).dx(x);
    }
    double deriv_xx_at(double t, double x) const {
        auto [k, w] = bracket(t);
        return (1.0 - w) * slice(k).dxx(x) + w * slice(k + 1).dxx(x);
    }

private:
    ModelParams params_;
    SpatialGrid grid_;
    double dt_;
    std::vector<double> times_;
    std::vector<double> values_;
};

}  // namespace illiq
