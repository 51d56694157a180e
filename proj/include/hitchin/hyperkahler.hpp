#pragma once

#include "hitchin/higgs.hpp"

namespace hitchin {

/// Tangent vector (alpha, phi_dot) to the configuration space: alpha varies the
/// dz-bar part of the connection, phi_dot the Higgs field. Both traceless.
class TangentPair {
 public:
  TangentPair(MatrixField alpha, MatrixField phi_dot);

  const MatrixField& alpha() const { return alpha_; }
  const MatrixField& phi_dot() const { return phi_dot_; }
  const GridRef& grid() const { return alpha_.grid(); }

 private:
  MatrixField alpha_;    // (0,1)
  MatrixField phi_dot_;  // (1,0)
};

TangentPair operator+(const TangentPair& v, const TangentPair& w);
TangentPair operator*(Complex s, const TangentPair& v);
/// Largest pointwise Frobenius difference over both components.
double max_difference(const TangentPair& v, const TangentPair& w);

/// I_1 (alpha, phi_dot) = (i alpha, i phi_dot)
/// I_2 (alpha, phi_dot) = (i phi_dot^*, -i alpha^*)
/// I_3 (alpha, phi_dot) = (-phi_dot^*, alpha^*)
/// with * the adjoint for the metric, which swaps (1,0) and (0,1).
TangentPair apply_I(int j, const TangentPair& v);
TangentPair apply_I(int j, const TangentPair& v, const HermitianMetricField& metric);

/// g(v, w) = 4 Re integral of Tr(alpha_v^* alpha_w + phi_dot_w^* phi_dot_v), the polarization of
/// 2i integral of Tr(alpha^* ^ alpha + Phi ^ Phi^*).
double l2_inner(const TangentPair& v, const TangentPair& w);
double l2_inner(const TangentPair& v, const TangentPair& w, const HermitianMetricField& metric);

/// dx^dy coefficients of the three moment maps.
struct MomentTriple {
  MatrixField mu1;  // F_A + t^2 [Phi ^ Phi^*], skew-hermitian for the metric
  MatrixField mu2;  // real part of dbar_A Phi
  MatrixField mu3;  // imaginary part of dbar_A Phi
};

/// Real and imaginary parts are taken in sl(2, C) = su(2) + i su(2) for the background metric.
MomentTriple moment_maps(const HiggsConfiguration& config, double t);

}  // namespace hitchin
