#include "hitchin/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hitchin {

namespace {

// Lagrange weights for the first derivative at x0 using nodes x0 + {a, b, c} offsets.
std::array<double, 3> first_weights(double xm, double x0, double xp, double at) {
  // Derivative of the quadratic interpolant through (xm, x0, xp) evaluated at `at`.
  const double wm = ((at - x0) + (at - xp)) / ((xm - x0) * (xm - xp));
  const double w0 = ((at - xm) + (at - xp)) / ((x0 - xm) * (x0 - xp));
  const double wp = ((at - xm) + (at - x0)) / ((xp - xm) * (xp - x0));
  return {wm, w0, wp};
}

std::array<double, 3> second_weights(double xm, double x0, double xp) {
  return {2.0 / ((xm - x0) * (xm - xp)), 2.0 / ((x0 - xm) * (x0 - xp)), 2.0 / ((xp - xm) * (xp - x0))};
}

}  // namespace

RadialGrid::RadialGrid(std::vector<double> nodes, Spacing rule) : nodes_(std::move(nodes)), spacing_(rule) {
  if (nodes_.size() < 3) throw ContractError("RadialGrid: need at least 3 nodes");
  if (!(nodes_.front() > 0.0)) throw ContractError("RadialGrid: r_min must be positive");
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i] > nodes_[i - 1])) {
      std::ostringstream os;
      os << "RadialGrid: nodes not strictly increasing at index " << i;
      throw ContractError(os.str());
    }
  }
  const std::size_t n = nodes_.size();
  d1_.resize(n);
  d2_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t off = i == 0 ? 0 : (i == n - 1 ? n - 3 : i - 1);
    const double a = nodes_[off], b = nodes_[off + 1], c = nodes_[off + 2];
    d1_[i] = {off, first_weights(a, b, c, nodes_[i])};
    d2_[i] = {off, second_weights(a, b, c)};
  }
}

RadialGrid RadialGrid::uniform(double r_min, double r_max, std::size_t n) {
  if (!(r_min > 0.0) || !(r_max > r_min) || n < 3) throw ContractError("RadialGrid::uniform: bad parameters");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = r_min + (r_max - r_min) * static_cast<double>(i) / static_cast<double>(n - 1);
  x.back() = r_max;
  return RadialGrid(std::move(x), Spacing::uniform_r);
}

RadialGrid RadialGrid::log_uniform(double r_min, double r_max, std::size_t n) {
  if (!(r_min > 0.0) || !(r_max > r_min) || n < 3) throw ContractError("RadialGrid::log_uniform: bad parameters");
  std::vector<double> x(n);
  const double a = std::log(r_min), b = std::log(r_max);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  x.front() = r_min;
  x.back() = r_max;
  return RadialGrid(std::move(x), Spacing::uniform_log_r);
}

RadialGrid RadialGrid::make(double r_min, double r_max, std::size_t n, Spacing rule) {
  return rule == Spacing::uniform_r ? uniform(r_min, r_max, n) : log_uniform(r_min, r_max, n);
}

double RadialGrid::max_spacing() const {
  double m = 0.0;
  for (std::size_t i = 1; i < nodes_.size(); ++i) m = std::max(m, nodes_[i] - nodes_[i - 1]);
  return m;
}

RadialGrid RadialGrid::refined() const {
  std::vector<double> x;
  x.reserve(2 * nodes_.size() - 1);
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    x.push_back(nodes_[i]);
    const double mid = spacing_ == Spacing::uniform_log_r ? std::sqrt(nodes_[i] * nodes_[i + 1])
                                                          : 0.5 * (nodes_[i] + nodes_[i + 1]);
    x.push_back(mid);
  }
  x.push_back(nodes_.back());
  return RadialGrid(std::move(x), spacing_);
}

std::vector<double> RadialGrid::r_dr_weights() const {
  std::vector<double> w(nodes_.size(), 0.0);
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    const double h = nodes_[i + 1] - nodes_[i];
    w[i] += 0.5 * h * nodes_[i];
    w[i + 1] += 0.5 * h * nodes_[i + 1];
  }
  return w;
}

FourierDerivative::FourierDerivative(std::size_t n) : n_(n), d1_(n * n, 0.0), d2_(n * n, 0.0) {
  if (n < 2 || n % 2 != 0) throw ContractError("FourierDerivative: n must be even");
  const double h = 2.0 * kPi / static_cast<double>(n);
  const double nn = static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      if (j == l) {
        d2_[j * n + l] = -nn * nn / 12.0 - 1.0 / 6.0;
        continue;
      }
      const long diff = static_cast<long>(j) - static_cast<long>(l);
      const double sign = (diff % 2 == 0) ? 1.0 : -1.0;
      const double x = static_cast<double>(diff) * h / 2.0;
      d1_[j * n + l] = 0.5 * sign / std::tan(x);
      d2_[j * n + l] = -0.5 * sign / (std::sin(x) * std::sin(x));
    }
  }
}

PolarGrid::PolarGrid(RadialGrid radial, std::size_t n_theta)
    : radial_(std::move(radial)), n_theta_(n_theta) {
  if (n_theta_ < 8 || n_theta_ % 2 != 0) throw ContractError("PolarGrid: n_theta must be even and >= 8");
  angular_ = std::make_shared<const FourierDerivative>(n_theta_);
}

Complex PolarGrid::point(std::size_t flat) const {
  const std::size_t i = flat / n_theta_, j = flat % n_theta_;
  return std::polar(radial_[i], theta(j));
}

TorusGrid::TorusGrid(double lx, double ly, std::size_t nx, std::size_t ny) : lx_(lx), ly_(ly), nx_(nx), ny_(ny) {
  if (!(lx > 0.0) || !(ly > 0.0)) throw ContractError("TorusGrid: periods must be positive");
  if (nx < 4 || ny < 4 || nx % 2 || ny % 2) throw ContractError("TorusGrid: node counts must be even and >= 4");
  dx_ = std::make_shared<const FourierDerivative>(nx);
  dy_ = std::make_shared<const FourierDerivative>(ny);
}

Complex TorusGrid::point(std::size_t flat) const {
  const std::size_t ix = flat % nx_, iy = flat / nx_;
  return {lx_ * static_cast<double>(ix) / static_cast<double>(nx_), ly_ * static_cast<double>(iy) / static_cast<double>(ny_)};
}

std::size_t node_count(const GridRef& grid) {
  return std::visit([](const auto& g) { return g->size(); }, grid);
}

Complex node_point(const GridRef& grid, std::size_t flat) {
  return std::visit([flat](const auto& g) { return g->point(flat); }, grid);
}

bool same_grid(const GridRef& a, const GridRef& b) {
  if (a.index() != b.index()) return false;
  if (const auto* pa = std::get_if<std::shared_ptr<const PolarGrid>>(&a)) {
    const auto& pb = std::get<std::shared_ptr<const PolarGrid>>(b);
    return *pa == pb || **pa == *pb;
  }
  const auto& ta = std::get<std::shared_ptr<const TorusGrid>>(a);
  const auto& tb = std::get<std::shared_ptr<const TorusGrid>>(b);
  return ta == tb || *ta == *tb;
}

bool is_polar(const GridRef& grid) { return std::holds_alternative<std::shared_ptr<const PolarGrid>>(grid); }

const PolarGrid& as_polar(const GridRef& grid) {
  if (!is_polar(grid)) throw ContractError("operation requires a polar grid");
  return *std::get<std::shared_ptr<const PolarGrid>>(grid);
}

}  // namespace hitchin
