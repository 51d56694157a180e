#include "hitchin/higgs.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SVD>

namespace hitchin {

namespace {

std::string node_label(const GridRef& grid, std::size_t i) {
  std::ostringstream os;
  os << "node " << i << " (z = " << node_point(grid, i) << ")";
  return os.str();
}

void check_metric_value(const Mat2& H, const GridRef& grid, std::size_t i) {
  const double scale = std::max(1.0, H.norm());
  if ((H - H.adjoint()).norm() > 1e-12 * scale)
    throw ContractError("HermitianMetricField: value not hermitian at " + node_label(grid, i));
  const double tr = H.trace().real();
  const double det = H.determinant().real();
  if (!(tr > 0.0) || !(det > 0.0))
    throw ContractError("HermitianMetricField: value not positive definite at " + node_label(grid, i));
}

Mat2 checked_inverse(const Mat2& g, const GridRef& grid, std::size_t i, const char* where) {
  Eigen::JacobiSVD<Mat2> svd(g);
  if (!(svd.singularValues()(1) > 1e-8))
    throw ContractError(std::string(where) + ": singular gauge transformation at " + node_label(grid, i));
  return g.inverse();
}

void require_degree(const MatrixField& f, FormDegree d, const char* what) {
  if (f.degree() != d)
    throw ContractError(std::string(what) + ": expected form degree " + to_string(d) + ", got " + to_string(f.degree()));
}

void require_traceless(const MatrixField& f, const char* what) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (std::abs(f[i].trace()) > 1e-10 * std::max(1.0, f[i].norm()))
      throw ContractError(std::string(what) + " is not traceless at " + node_label(f.grid(), i));
  }
}

}  // namespace

// --- HermitianMetricField ----------------------------------------------------

HermitianMetricField::HermitianMetricField(MatrixField H, bool det_normalized)
    : H_(std::move(H)), det_normalized_(det_normalized) {
  require_degree(H_, FormDegree::zero, "HermitianMetricField");
  for (std::size_t i = 0; i < H_.size(); ++i) {
    check_metric_value(H_[i], H_.grid(), i);
    if (det_normalized_ && std::abs(H_[i].determinant() - 1.0) > 1e-12)
      throw ContractError("HermitianMetricField: det H != 1 at " + node_label(H_.grid(), i));
  }
}

HermitianMetricField HermitianMetricField::identity(GridRef grid) {
  return {MatrixField::constant(std::move(grid), FormDegree::zero, Mat2::Identity()), true};
}

// --- GaugeTransformField -----------------------------------------------------

GaugeTransformField::GaugeTransformField(MatrixField g, std::optional<std::vector<Mat2>> dzbar_g)
    : g_(std::move(g)), dzbar_g_(std::move(dzbar_g)) {
  require_degree(g_, FormDegree::zero, "GaugeTransformField");
  if (dzbar_g_ && dzbar_g_->size() != g_.size())
    throw ContractError("GaugeTransformField: derivative data has the wrong size");
  for (std::size_t i = 0; i < g_.size(); ++i) {
    const Mat2 inv = checked_inverse(g_[i], g_.grid(), i, "GaugeTransformField");
    const Complex det = g_[i].determinant();
    if (std::abs(det - 1.0) <= 1e-15) continue;
    // s = det^{-1/2}; d s = -s/2 Tr(g^{-1} d g).
    const Complex s = 1.0 / std::sqrt(det);
    if (dzbar_g_) {
      Mat2& dg = (*dzbar_g_)[i];
      const Complex ds = -0.5 * s * (inv * dg).trace();
      dg = dg * s + g_[i] * ds;
    }
    g_[i] *= s;
  }
}

// --- HiggsConfiguration ------------------------------------------------------

HiggsConfiguration::HiggsConfiguration(MatrixField a_, MatrixField phi_)
    : a(std::move(a_)), phi(std::move(phi_)), background(HermitianMetricField::identity(phi.grid())) {
  validate();
}

HiggsConfiguration::HiggsConfiguration(MatrixField a_, MatrixField phi_, HermitianMetricField background_)
    : a(std::move(a_)), phi(std::move(phi_)), background(std::move(background_)) {
  validate();
}

void HiggsConfiguration::validate() const {
  require_degree(a, FormDegree::one_zero, "HiggsConfiguration connection");
  require_degree(phi, FormDegree::one_zero, "HiggsConfiguration Higgs field");
  require_same_grid(a, phi, "HiggsConfiguration");
  require_same_grid(phi, background.H(), "HiggsConfiguration");
  require_traceless(a, "HiggsConfiguration connection");
  require_traceless(phi, "HiggsConfiguration Higgs field");
}

MatrixField HiggsConfiguration::a_zero_one() const {
  MatrixField b = adjoint_wrt(a, background).with_degree(FormDegree::zero_one);
  b *= -1.0;
  return b;
}

HiggsConfiguration with_trivial_connection(MatrixField phi) {
  MatrixField a(phi.grid(), FormDegree::one_zero);
  return {std::move(a), std::move(phi)};
}

// --- algebra -------------------------------------------------------------------

Mat2 adjoint_wrt(const Mat2& phi, const Mat2& H) {
  const double tr = H.trace().real();
  const double det = H.determinant().real();
  if ((H - H.adjoint()).norm() > 1e-12 * std::max(1.0, H.norm()) || !(tr > 0.0) || !(det > 0.0))
    throw ContractError("adjoint_wrt: metric is not hermitian positive definite");
  return H.inverse() * phi.adjoint() * H;
}

MatrixField adjoint_wrt(const MatrixField& phi, const HermitianMetricField& H) {
  require_same_grid(phi, H.H(), "adjoint_wrt");
  MatrixField out(phi.grid(), phi.degree());
  for (std::size_t i = 0; i < phi.size(); ++i) out[i] = H[i].inverse() * phi[i].adjoint() * H[i];
  return out;
}

MatrixField bracket_term(const MatrixField& phi, const HermitianMetricField& H) {
  require_same_grid(phi, H.H(), "bracket_term");
  MatrixField out(phi.grid(), FormDegree::two);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const Mat2 star = H[i].inverse() * phi[i].adjoint() * H[i];
    out[i] = commutator(phi[i], star);
  }
  return out;
}

MatrixField chern_curvature(const HermitianMetricField& H) {
  const auto dH = partial_z(H.H());
  MatrixField conn(H.grid(), FormDegree::one_zero);
  for (std::size_t i = 0; i < conn.size(); ++i) conn[i] = H[i].inverse() * dH[i];
  return d_zbar(conn);
}

MatrixField hermitian_residual(const HermitianMetricField& H, const MatrixField& phi, double t) {
  if (!(t > 0.0)) throw ContractError("hermitian_residual: t must be positive");
  MatrixField out = chern_curvature(H);
  out += Complex(t * t) * bracket_term(phi, H);
  return out;
}

MatrixField curvature(const HiggsConfiguration& config) {
  const MatrixField b = config.a_zero_one();
  MatrixField F = d_z(b);
  F += d_zbar(config.a);
  for (std::size_t i = 0; i < F.size(); ++i) F[i] += commutator(config.a[i], b[i]);
  return F;
}

MatrixField dbar_A_phi(const HiggsConfiguration& config) {
  const MatrixField b = config.a_zero_one();
  MatrixField out = d_zbar(config.phi);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= commutator(b[i], config.phi[i]);
  return out;
}

HiggsConfiguration gauge_apply(const GaugeTransformField& g, const HiggsConfiguration& config) {
  require_same_grid(g.g(), config.phi, "gauge_apply");
  const std::vector<Mat2> dg = g.dzbar_g() ? *g.dzbar_g() : partial_zbar(g.g());
  const MatrixField b = config.a_zero_one();
  MatrixField phi(config.grid(), FormDegree::one_zero);
  MatrixField a(config.grid(), FormDegree::one_zero);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const Mat2& gi = g.g()[i];
    const Mat2 inv = checked_inverse(gi, config.grid(), i, "gauge_apply");
    phi[i] = inv * config.phi[i] * gi;
    const Mat2 bg = inv * b[i] * gi + inv * dg[i];
    a[i] = -(config.background[i].inverse() * bg.adjoint() * config.background[i]);
    // Project out the trace left by discrete derivatives of det g = 1.
    const Complex ta = 0.5 * a[i].trace(), tp = 0.5 * phi[i].trace();
    a[i].diagonal().array() -= ta;
    phi[i].diagonal().array() -= tp;
  }
  return {std::move(a), std::move(phi), config.background};
}

namespace {

HitchinResidual assemble(const HiggsConfiguration& config, double t) {
  if (!(t > 0.0)) throw ContractError("hitchin_residual: t must be positive");
  MatrixField first = curvature(config);
  first += Complex(t * t) * bracket_term(config.phi, config.background);
  return {std::move(first), dbar_A_phi(config), {}, {}};
}

}  // namespace

HitchinResidual hitchin_residual(const HiggsConfiguration& config, double t) {
  HitchinResidual r = assemble(config, t);
  r.first_norms = norms(r.first);
  r.second_norms = norms(r.second);
  return r;
}

HitchinResidual hitchin_residual(const HiggsConfiguration& config, double t, RadialInterval region) {
  HitchinResidual r = assemble(config, t);
  r.first_norms = norms(r.first, region);
  r.second_norms = norms(r.second, region);
  return r;
}

}  // namespace hitchin
