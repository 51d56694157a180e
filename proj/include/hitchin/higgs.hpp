#pragma once

#include <optional>
#include <vector>

#include "hitchin/calculus.hpp"
#include "hitchin/field.hpp"

namespace hitchin {

/// Pointwise hermitian positive-definite metric. Construction validates the values.
class HermitianMetricField {
 public:
  /// Throws ContractError if some value is not hermitian positive definite, or if
  /// `det_normalized` is requested and det H differs from 1 by more than 1e-12.
  HermitianMetricField(MatrixField H, bool det_normalized);

  static HermitianMetricField identity(GridRef grid);

  const MatrixField& H() const { return H_; }
  bool det_normalized() const { return det_normalized_; }
  const GridRef& grid() const { return H_.grid(); }
  const Mat2& operator[](std::size_t i) const { return H_[i]; }

 private:
  MatrixField H_;
  bool det_normalized_;
};

/// Complex gauge transformation with det g = 1. Values are renormalised by
/// (det g)^{-1/2} on construction. Optionally carries the exact d_zbar g, which
/// gauge_apply then uses instead of the discrete derivative.
class GaugeTransformField {
 public:
  explicit GaugeTransformField(MatrixField g, std::optional<std::vector<Mat2>> dzbar_g = std::nullopt);

  const MatrixField& g() const { return g_; }
  const GridRef& grid() const { return g_.grid(); }
  const std::optional<std::vector<Mat2>>& dzbar_g() const { return dzbar_g_; }

 private:
  MatrixField g_;
  std::optional<std::vector<Mat2>> dzbar_g_;
};

/// Pair (A, phi dz). The connection is stored by its dz coefficient `a`; the
/// full connection is A = a dz - a^* dz-bar, with * the background adjoint.
struct HiggsConfiguration {
  MatrixField a;
  MatrixField phi;
  HermitianMetricField background;

  HiggsConfiguration(MatrixField a, MatrixField phi);
  HiggsConfiguration(MatrixField a, MatrixField phi, HermitianMetricField background);

  /// dz-bar coefficient of A.
  MatrixField a_zero_one() const;
  const GridRef& grid() const { return phi.grid(); }

 private:
  void validate() const;
};

/// Trivial connection with the given Higgs field.
HiggsConfiguration with_trivial_connection(MatrixField phi);

/// H^{-1} phi^dagger H.
Mat2 adjoint_wrt(const Mat2& phi, const Mat2& H);
MatrixField adjoint_wrt(const MatrixField& phi, const HermitianMetricField& H);

/// [phi, phi^{*H}] as a dz^dz-bar coefficient.
MatrixField bracket_term(const MatrixField& phi, const HermitianMetricField& H);

/// dbar(H^{-1} dH) as a dz^dz-bar coefficient.
MatrixField chern_curvature(const HermitianMetricField& H);

/// chern_curvature(H) + t^2 bracket_term(phi, H).
MatrixField hermitian_residual(const HermitianMetricField& H, const MatrixField& phi, double t);

/// Curvature F_A = dA + A^A of the stored connection, as a dz^dz-bar coefficient.
MatrixField curvature(const HiggsConfiguration& config);

/// Coefficient of dbar_A Phi on dz^dz-bar.
MatrixField dbar_A_phi(const HiggsConfiguration& config);

/// phi -> g^{-1} phi g, dbar_A -> g^{-1} dbar_A g, the connection rebuilt as a
/// unitary one for the background metric.
HiggsConfiguration gauge_apply(const GaugeTransformField& g, const HiggsConfiguration& config);

struct HitchinResidual {
  MatrixField first;   // F_A + t^2 [phi, phi^*]
  MatrixField second;  // dbar_A phi
  Norms first_norms;
  Norms second_norms;
};

HitchinResidual hitchin_residual(const HiggsConfiguration& config, double t);
/// Norms restricted to an annulus of a polar grid.
HitchinResidual hitchin_residual(const HiggsConfiguration& config, double t, RadialInterval region);

}  // namespace hitchin
