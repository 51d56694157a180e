#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "hitchin/types.hpp"

namespace hitchin {

enum class Spacing { uniform_r, uniform_log_r };

/// Three-point finite-difference weights for one node: value at `offset + m` is
/// multiplied by `weights[m]`.
struct Stencil {
  std::size_t offset = 0;
  std::array<double, 3> weights{};
};

/// Strictly increasing radii on [r_min, r_max], with precomputed second-order
/// first- and second-derivative stencils (one-sided at the ends).
class RadialGrid {
 public:
  RadialGrid(std::vector<double> nodes, Spacing rule);

  static RadialGrid uniform(double r_min, double r_max, std::size_t n);
  static RadialGrid log_uniform(double r_min, double r_max, std::size_t n);
  static RadialGrid make(double r_min, double r_max, std::size_t n, Spacing rule);

  double r_min() const { return nodes_.front(); }
  double r_max() const { return nodes_.back(); }
  std::size_t size() const { return nodes_.size(); }
  double operator[](std::size_t i) const { return nodes_[i]; }
  std::span<const double> nodes() const { return nodes_; }
  Spacing spacing() const { return spacing_; }

  /// Largest gap between neighbouring nodes.
  double max_spacing() const;

  /// Same interval and rule with the spacing halved; every old node is kept.
  RadialGrid refined() const;

  const Stencil& first_derivative(std::size_t i) const { return d1_[i]; }
  const Stencil& second_derivative(std::size_t i) const { return d2_[i]; }

  /// Trapezoidal weights for the measure r dr.
  std::vector<double> r_dr_weights() const;

  bool operator==(const RadialGrid& other) const { return nodes_ == other.nodes_; }

 private:
  std::vector<double> nodes_;
  Spacing spacing_;
  std::vector<Stencil> d1_;
  std::vector<Stencil> d2_;
};

/// Periodic spectral differentiation on n equispaced samples of a 2*pi periodic function.
class FourierDerivative {
 public:
  explicit FourierDerivative(std::size_t n);
  std::size_t size() const { return n_; }
  double first(std::size_t j, std::size_t l) const { return d1_[j * n_ + l]; }
  double second(std::size_t j, std::size_t l) const { return d2_[j * n_ + l]; }

 private:
  std::size_t n_;
  std::vector<double> d1_;
  std::vector<double> d2_;
};

/// Tensor grid radial x angle. Node (i, j) sits at r_i e^{2 pi i j / n_theta} and has
/// flat index i * n_theta + j.
class PolarGrid {
 public:
  PolarGrid(RadialGrid radial, std::size_t n_theta);

  const RadialGrid& radial() const { return radial_; }
  std::size_t n_r() const { return radial_.size(); }
  std::size_t n_theta() const { return n_theta_; }
  std::size_t size() const { return n_r() * n_theta_; }
  std::size_t index(std::size_t i, std::size_t j) const { return i * n_theta_ + j; }
  double theta(std::size_t j) const { return 2.0 * kPi * static_cast<double>(j) / static_cast<double>(n_theta_); }
  Complex point(std::size_t flat) const;
  double radius(std::size_t flat) const { return radial_[flat / n_theta_]; }
  const FourierDerivative& angular() const { return *angular_; }

  PolarGrid refined() const { return PolarGrid(radial_.refined(), n_theta_); }

  bool operator==(const PolarGrid& other) const {
    return n_theta_ == other.n_theta_ && radial_ == other.radial_;
  }

 private:
  RadialGrid radial_;
  std::size_t n_theta_;
  std::shared_ptr<const FourierDerivative> angular_;
};

/// Flat torus [0, lx) x [0, ly) with nx * ny equispaced nodes; flat index iy * nx + ix.
class TorusGrid {
 public:
  TorusGrid(double lx, double ly, std::size_t nx, std::size_t ny);

  double lx() const { return lx_; }
  double ly() const { return ly_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return nx_ * ny_; }
  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx_ + ix; }
  Complex point(std::size_t flat) const;
  double cell_area() const { return lx_ * ly_ / static_cast<double>(size()); }
  const FourierDerivative& dx() const { return *dx_; }
  const FourierDerivative& dy() const { return *dy_; }

  bool operator==(const TorusGrid& other) const {
    return lx_ == other.lx_ && ly_ == other.ly_ && nx_ == other.nx_ && ny_ == other.ny_;
  }

 private:
  double lx_, ly_;
  std::size_t nx_, ny_;
  std::shared_ptr<const FourierDerivative> dx_;
  std::shared_ptr<const FourierDerivative> dy_;
};

using GridRef = std::variant<std::shared_ptr<const PolarGrid>, std::shared_ptr<const TorusGrid>>;

std::size_t node_count(const GridRef& grid);
Complex node_point(const GridRef& grid, std::size_t flat);
bool same_grid(const GridRef& a, const GridRef& b);
const PolarGrid& as_polar(const GridRef& grid);  // throws ContractError for torus grids
bool is_polar(const GridRef& grid);

inline GridRef share(PolarGrid g) { return std::make_shared<const PolarGrid>(std::move(g)); }
inline GridRef share(TorusGrid g) { return std::make_shared<const TorusGrid>(std::move(g)); }

}  // namespace hitchin
