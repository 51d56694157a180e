#include "hitchin/hyperkahler.hpp"

namespace hitchin {

namespace {

void require_traceless(const MatrixField& f, const char* what) {
  for (std::size_t i = 0; i < f.size(); ++i)
    if (std::abs(f[i].trace()) > 1e-12 * std::max(1.0, f[i].norm()))
      throw ContractError(std::string("TangentPair: ") + what + " is not traceless");
}

MatrixField star(const MatrixField& f, const HermitianMetricField& metric, FormDegree to) {
  return adjoint_wrt(f, metric).with_degree(to);
}

}  // namespace

TangentPair::TangentPair(MatrixField alpha, MatrixField phi_dot)
    : alpha_(std::move(alpha)), phi_dot_(std::move(phi_dot)) {
  if (alpha_.degree() != FormDegree::zero_one) throw ContractError("TangentPair: alpha must be a (0,1)-form");
  if (phi_dot_.degree() != FormDegree::one_zero) throw ContractError("TangentPair: phi_dot must be a (1,0)-form");
  require_same_grid(alpha_, phi_dot_, "TangentPair");
  require_traceless(alpha_, "alpha");
  require_traceless(phi_dot_, "phi_dot");
}

TangentPair operator+(const TangentPair& v, const TangentPair& w) {
  return {v.alpha() + w.alpha(), v.phi_dot() + w.phi_dot()};
}

TangentPair operator*(Complex s, const TangentPair& v) { return {s * v.alpha(), s * v.phi_dot()}; }

double max_difference(const TangentPair& v, const TangentPair& w) {
  return std::max(max_difference(v.alpha(), w.alpha()), max_difference(v.phi_dot(), w.phi_dot()));
}

TangentPair apply_I(int j, const TangentPair& v) { return apply_I(j, v, HermitianMetricField::identity(v.grid())); }

TangentPair apply_I(int j, const TangentPair& v, const HermitianMetricField& metric) {
  switch (j) {
    case 1:
      return {kI * v.alpha(), kI * v.phi_dot()};
    case 2:
      return {kI * star(v.phi_dot(), metric, FormDegree::zero_one),
              -kI * star(v.alpha(), metric, FormDegree::one_zero)};
    case 3:
      return {Complex(-1.0) * star(v.phi_dot(), metric, FormDegree::zero_one),
              star(v.alpha(), metric, FormDegree::one_zero)};
    default:
      throw ContractError("apply_I: j must be 1, 2 or 3");
  }
}

double l2_inner(const TangentPair& v, const TangentPair& w) {
  return l2_inner(v, w, HermitianMetricField::identity(v.grid()));
}

double l2_inner(const TangentPair& v, const TangentPair& w, const HermitianMetricField& metric) {
  require_same_grid(v.alpha(), w.alpha(), "l2_inner");
  require_same_grid(v.alpha(), metric.H(), "l2_inner");
  const std::vector<double> weights = area_weights(v.grid());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const Mat2 a_star = adjoint_wrt(v.alpha()[i], metric[i]);
    const Mat2 p_star = adjoint_wrt(w.phi_dot()[i], metric[i]);
    acc += weights[i] * (a_star * w.alpha()[i] + v.phi_dot()[i] * p_star).trace().real();
  }
  return 4.0 * acc;
}

MomentTriple moment_maps(const HiggsConfiguration& config, double t) {
  const HitchinResidual r = hitchin_residual(config, t);
  // dz^dz-bar = -2i dx^dy.
  MatrixField mu1 = (Complex(0.0, -2.0) * r.first).with_degree(FormDegree::area);
  const MatrixField y = (Complex(0.0, -2.0) * r.second).with_degree(FormDegree::area);
  const MatrixField y_star = adjoint_wrt(y, config.background);
  MatrixField mu2 = 0.5 * (y - y_star);
  MatrixField mu3 = Complex(0.0, -0.5) * (y + y_star);
  return {std::move(mu1), std::move(mu2), std::move(mu3)};
}

}  // namespace hitchin
