#include "hitchin/calculus.hpp"

#include <algorithm>
#include <cmath>

namespace hitchin {

namespace {

struct Gradients {
  std::vector<Mat2> dz;
  std::vector<Mat2> dzbar;
};

// Wirtinger derivatives on a polar grid: d_z = e^{-i theta}/2 (d_r - (i/r) d_theta),
// d_zbar = e^{i theta}/2 (d_r + (i/r) d_theta).
Gradients polar_gradients(const PolarGrid& g, const std::vector<Mat2>& f, bool want_dz, bool want_dzbar) {
  if (g.n_r() < 4) throw ContractError("derivative: polar grid needs at least 4 radial nodes");
  const std::size_t nt = g.n_theta();
  const auto& ang = g.angular();
  Gradients out;
  if (want_dz) out.dz.assign(f.size(), Mat2::Zero());
  if (want_dzbar) out.dzbar.assign(f.size(), Mat2::Zero());
  std::vector<Complex> phase(nt);
  for (std::size_t j = 0; j < nt; ++j) phase[j] = std::polar(1.0, g.theta(j));
  for (std::size_t i = 0; i < g.n_r(); ++i) {
    const Stencil& st = g.radial().first_derivative(i);
    const double r = g.radial()[i];
    for (std::size_t j = 0; j < nt; ++j) {
      // Differences against the centre value make derivatives of constants exactly zero.
      const std::size_t idx = g.index(i, j);
      const Mat2& centre = f[idx];
      Mat2 dr = Mat2::Zero();
      for (std::size_t m = 0; m < 3; ++m) dr += st.weights[m] * (f[g.index(st.offset + m, j)] - centre);
      Mat2 dth = Mat2::Zero();
      for (std::size_t l = 0; l < nt; ++l) {
        const double w = ang.first(j, l);
        if (w != 0.0) dth += w * (f[g.index(i, l)] - centre);
      }
      if (want_dz) out.dz[idx] = 0.5 * std::conj(phase[j]) * (dr - (kI / r) * dth);
      if (want_dzbar) out.dzbar[idx] = 0.5 * phase[j] * (dr + (kI / r) * dth);
    }
  }
  return out;
}

Gradients torus_gradients(const TorusGrid& g, const std::vector<Mat2>& f, bool want_dz, bool want_dzbar) {
  const std::size_t nx = g.nx(), ny = g.ny();
  const double sx = 2.0 * kPi / g.lx(), sy = 2.0 * kPi / g.ly();
  Gradients out;
  if (want_dz) out.dz.assign(f.size(), Mat2::Zero());
  if (want_dzbar) out.dzbar.assign(f.size(), Mat2::Zero());
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const Mat2& centre = f[g.index(ix, iy)];
      Mat2 fx = Mat2::Zero(), fy = Mat2::Zero();
      for (std::size_t l = 0; l < nx; ++l) {
        const double w = g.dx().first(ix, l);
        if (w != 0.0) fx += w * (f[g.index(l, iy)] - centre);
      }
      for (std::size_t l = 0; l < ny; ++l) {
        const double w = g.dy().first(iy, l);
        if (w != 0.0) fy += w * (f[g.index(ix, l)] - centre);
      }
      fx *= sx;
      fy *= sy;
      const std::size_t idx = g.index(ix, iy);
      if (want_dz) out.dz[idx] = 0.5 * (fx - kI * fy);
      if (want_dzbar) out.dzbar[idx] = 0.5 * (fx + kI * fy);
    }
  }
  return out;
}

Gradients gradients(const MatrixField& field, bool want_dz, bool want_dzbar) {
  if (is_polar(field.grid())) return polar_gradients(as_polar(field.grid()), field.values(), want_dz, want_dzbar);
  return torus_gradients(*std::get<std::shared_ptr<const TorusGrid>>(field.grid()), field.values(), want_dz, want_dzbar);
}

}  // namespace

std::vector<Mat2> partial_z(const MatrixField& field) { return gradients(field, true, false).dz; }
std::vector<Mat2> partial_zbar(const MatrixField& field) { return gradients(field, false, true).dzbar; }

MatrixField d_z(const MatrixField& field) {
  switch (field.degree()) {
    case FormDegree::zero: return MatrixField(field.grid(), FormDegree::one_zero, partial_z(field));
    case FormDegree::zero_one: return MatrixField(field.grid(), FormDegree::two, partial_z(field));
    default:
      throw ContractError(std::string("d_z: unsupported form degree ") + to_string(field.degree()));
  }
}

MatrixField d_zbar(const MatrixField& field) {
  switch (field.degree()) {
    case FormDegree::zero: return MatrixField(field.grid(), FormDegree::zero_one, partial_zbar(field));
    case FormDegree::one_zero: {
      MatrixField out(field.grid(), FormDegree::two, partial_zbar(field));
      out *= -1.0;
      return out;
    }
    default:
      throw ContractError(std::string("d_zbar: unsupported form degree ") + to_string(field.degree()));
  }
}

std::vector<std::size_t> nodes_in(const PolarGrid& grid, RadialInterval region) {
  std::vector<std::size_t> out;
  const double tol = 1e-12 * std::max(1.0, region.hi);
  for (std::size_t i = 0; i < grid.n_r(); ++i) {
    const double r = grid.radial()[i];
    if (r < region.lo - tol || r > region.hi + tol) continue;
    for (std::size_t j = 0; j < grid.n_theta(); ++j) out.push_back(grid.index(i, j));
  }
  return out;
}

double max_difference(const MatrixField& a, const MatrixField& b, RadialInterval region) {
  require_same_grid(a, b, "max_difference");
  double m = 0.0;
  for (std::size_t i : nodes_in(as_polar(a.grid()), region)) m = std::max(m, (a[i] - b[i]).norm());
  return m;
}

std::vector<double> area_weights(const GridRef& grid) {
  if (is_polar(grid)) {
    const PolarGrid& g = as_polar(grid);
    const auto wr = g.radial().r_dr_weights();
    const double dth = 2.0 * kPi / static_cast<double>(g.n_theta());
    std::vector<double> w(g.size());
    for (std::size_t i = 0; i < g.n_r(); ++i)
      for (std::size_t j = 0; j < g.n_theta(); ++j) w[g.index(i, j)] = wr[i] * dth;
    return w;
  }
  const auto& t = *std::get<std::shared_ptr<const TorusGrid>>(grid);
  return std::vector<double>(t.size(), t.cell_area());
}

namespace {

double degree_scale(FormDegree d) { return d == FormDegree::two ? 2.0 : 1.0; }

}  // namespace

Norms norms(const MatrixField& field, RadialInterval region) {
  const PolarGrid& g = as_polar(field.grid());
  if (!(region.hi >= region.lo)) throw ContractError("norms: empty region");
  std::size_t lo = g.n_r(), hi = 0;
  const double tol = 1e-12 * std::max(1.0, region.hi);
  for (std::size_t i = 0; i < g.n_r(); ++i) {
    const double r = g.radial()[i];
    if (r >= region.lo - tol && r <= region.hi + tol) {
      lo = std::min(lo, i);
      hi = std::max(hi, i);
    }
  }
  if (lo > hi) throw ContractError("norms: region contains no grid nodes");
  const double scale = degree_scale(field.degree());
  const double dth = 2.0 * kPi / static_cast<double>(g.n_theta());
  Norms out;
  double sum = 0.0;
  for (std::size_t i = lo; i <= hi; ++i) {
    double w = 0.0;
    if (i > lo) w += 0.5 * (g.radial()[i] - g.radial()[i - 1]);
    if (i < hi) w += 0.5 * (g.radial()[i + 1] - g.radial()[i]);
    w *= g.radial()[i] * dth;
    for (std::size_t j = 0; j < g.n_theta(); ++j) {
      const double v = scale * field[g.index(i, j)].norm();
      out.sup = std::max(out.sup, v);
      sum += w * v * v;
    }
  }
  out.l2 = std::sqrt(sum);
  return out;
}

Norms norms(const MatrixField& field) {
  if (is_polar(field.grid())) {
    const auto& g = as_polar(field.grid());
    return norms(field, {g.radial().r_min(), g.radial().r_max()});
  }
  const auto w = area_weights(field.grid());
  const double scale = degree_scale(field.degree());
  Norms out;
  double sum = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double v = scale * field[i].norm();
    out.sup = std::max(out.sup, v);
    sum += w[i] * v * v;
  }
  out.l2 = std::sqrt(sum);
  return out;
}

}  // namespace hitchin
