#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "hitchin/fiducial.hpp"

namespace hitchin {

/// chi(r) = S((eps - r) / (eps/2)) with S(s) = 6s^5 - 15s^4 + 10s^3 clamped to [0, 1].
struct CutoffFunction {
  double epsilon = 1.0;
  RadialGrid grid;
  std::vector<double> chi;
  std::vector<double> chi_prime;

  static double value(double epsilon, double r);
  static double derivative(double epsilon, double r);
  static double second_derivative(double epsilon, double r);
  /// max |chi'| = 15 / (4 eps).
  double derivative_bound() const { return 3.75 / epsilon; }
};

/// Requires [eps/2, eps] inside the grid with at least 8 nodes in it.
CutoffFunction make_cutoff(double epsilon, const RadialGrid& grid);

enum class PatchRegion { fiducial, blended, limiting };

/// Fiducial data inside r <= eps/2, limiting data outside r >= eps, blended in
/// profile space: h_app = chi h_t.
struct ApproximatePair {
  double t = 1.0;
  double epsilon = 1.0;
  int k = 1;
  CutoffFunction cutoff;
  FiducialSolution fiducial;  // the unblended solution on the same grid
  FiducialSolution pair;      // blended profile; pair.config is the approximate configuration
  std::vector<PatchRegion> regions;  // per radial node

  const HiggsConfiguration& config() const { return pair.config; }
  const PolarGrid& grid() const { return pair.grid(); }
};

ApproximatePair make_approximate(double t, int k, double epsilon, const std::shared_ptr<const PolarGrid>& grid,
                                 const FiducialOptions& options = {});
ApproximatePair make_approximate(const FiducialSolution& fiducial, double epsilon);

/// Log-uniform polar grid valid for the ODE at every t in [t_min, t_max] and
/// reaching at least r = 2 eps.
std::shared_ptr<const PolarGrid> gluing_grid(double t_min, double t_max, int k, double epsilon, std::size_t n_r,
                                             std::size_t n_theta);

struct ErrorTerm {
  MatrixField field;    // F_A + t^2 [phi, phi^*] of the approximate pair
  Norms annulus;        // over eps/2 <= r <= eps
  double outside_sup = 0.0;  // nodes at least 3 cells away from the annulus and the grid ends
  double floor = 0.0;        // residual of the unblended solutions on those nodes
  /// Annulus norms of field minus the residual of the limiting pair on the same
  /// grid, which is pure discretization error.
  Norms corrected;
  /// Annulus norms of the radial reduction
  /// -(1/4) [chi'' h + 2 chi' h' + chi' h / r + 8 t^2 r^k (chi sinh 2h - sinh 2 chi h)] sigma_3.
  Norms reduced;
};

ErrorTerm error_term(const ApproximatePair& ap);

/// Least-squares slope c of log(values) ~ a - c t.
double exponential_rate(const std::vector<double>& t, const std::vector<double>& values);

/// dz^dz-bar coefficient of [Phi^* ^ [Phi, gamma]] - [Phi ^ [Phi^*, gamma]] for
/// Phi = phi dz and Phi^* = phi^dagger dz-bar. gamma must be hermitian and traceless.
Mat2 m_phi(const Mat2& phi, const Mat2& gamma);

/// dz^dz-bar coefficient of [Phi ^ [Phi, gamma]^*], which equals -[Phi ^ [Phi^*, gamma]] for hermitian gamma.
Mat2 phi_wedge_bracket_star(const Mat2& phi, const Mat2& gamma);
Mat2 phi_wedge_bracket_phistar(const Mat2& phi, const Mat2& gamma);

enum class BoundaryCondition { neumann, dirichlet };

/// Rotationally equivariant pair in the unitary frame: a = f sigma_3 / z and
/// phi = [[0, r^{k/2} e^h], [z^k r^{-k/2} e^{-h}, 0]]. `higgs = false` drops phi
/// (k is then irrelevant).
struct RadialBackground {
  RadialGrid grid;
  int k = 0;
  std::vector<double> h;
  std::vector<double> f;
  bool higgs = true;
};

RadialBackground trivial_background(const RadialGrid& grid);
RadialBackground limiting_background(int k, const RadialGrid& grid);
/// Reads f and h off the configuration; throws ContractError if it is not of the equivariant form.
RadialBackground radial_background(const HiggsConfiguration& config, int k);
RadialBackground radial_background(const FiducialSolution& sol);
RadialBackground radial_background(const ApproximatePair& ap);

/// L_t = Delta_A - i * t^2 M_phi restricted to Fourier mode n. The traceless fiber
/// is complexified as gamma = [[x, w], [v, -x]] with x ~ e^{i n theta},
/// w ~ e^{i n theta}, v ~ e^{i (n + k) theta}; unknowns are interleaved (x, w, v)
/// per radial node. Finite volumes in r dr, natural (Neumann) or zero (Dirichlet)
/// boundary values at both ends.
class ModeOperator {
 public:
  ModeOperator(int n, double t, const RadialBackground& background, BoundaryCondition bc);

  int mode_index() const { return n_; }
  double t() const { return t_; }
  BoundaryCondition boundary_condition() const { return bc_; }
  std::size_t dimension() const { return 3 * nodes_.size(); }
  /// Radial node indices carrying unknowns.
  const std::vector<std::size_t>& nodes() const { return nodes_; }
  /// Control-volume measure of each unknown node (integral of r dr).
  const std::vector<double>& weights() const { return weights_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  /// S = W L, symmetric.
  Eigen::SparseMatrix<double> symmetric_form() const;
  Eigen::MatrixXd dense() const;

  /// Smallest `count` eigenvalues (ascending) of L in L^2(r dr).
  std::vector<double> smallest_eigenvalues(std::size_t count) const;
  double largest_eigenvalue() const;
  /// max |<Lu, v> - <u, Lv>| / (|Lu| |v|) over a few seeded random pairs.
  double self_adjointness_defect(std::uint64_t seed = 1) const;
  /// ||Delta_A L^{-1}|| in L^2(r dr), by power iteration. L must be positive definite.
  double laplacian_inverse_norm(std::size_t iterations = 200) const;
  /// Eigenvalues below this are treated as zero: 1e-13 times the largest diagonal entry of L.
  double singular_tolerance() const;
  /// Largest entry of the zeroth-order term t^2 V (pointwise 3x3 operator norm).
  double potential_sup() const;

 private:
  int n_;
  double t_;
  BoundaryCondition bc_;
  std::vector<std::size_t> nodes_;
  std::vector<double> weights_;
  std::vector<double> band_;  // lower band of S, column major, ldab = kBand + 1
  std::vector<std::array<double, 4>> potential_;  // per node: xx, ww, vv, wv

  static constexpr int kBand = 3;
  double& s(std::size_t i, std::size_t j);
  double s(std::size_t i, std::size_t j) const;
  std::vector<double> scaled_band() const;
};

ModeOperator assemble_Lt(int n, double t, const RadialBackground& background,
                         BoundaryCondition bc = BoundaryCondition::neumann);
ModeOperator assemble_Lt(int n, double t, const FiducialSolution& background,
                         BoundaryCondition bc = BoundaryCondition::neumann);
ModeOperator assemble_Lt(int n, double t, const ApproximatePair& background,
                         BoundaryCondition bc = BoundaryCondition::neumann);

/// Full L_t on a polar grid with Neumann ends, built from the matrix formula
/// -i * t^2 M_phi gamma = 2 t^2 ([phi^*, [phi, gamma]] + [phi, [phi^*, gamma]]).
MatrixField apply_Lt(const HiggsConfiguration& config, int k, double t, const MatrixField& gamma);

/// -2 (D_zbar D_z + D_z D_zbar) gamma from the Wirtinger derivatives of the calculus module.
MatrixField covariant_laplacian(const HiggsConfiguration& config, const MatrixField& gamma);

struct QuadraticFormCheck {
  double lhs = 0.0;  // <L_t gamma, gamma>
  double rhs = 0.0;  // ||d_A gamma||^2 + 4 t^2 ||[phi, gamma]||^2
  double gap = 0.0;  // |lhs - rhs| / max(|lhs|, |rhs|), 0 when both vanish
  double gradient = 0.0;     // ||d_A gamma||^2
  double commutator = 0.0;   // ||[phi, gamma]||^2
};

/// gamma must be hermitian, traceless and zero on the 3 outermost rings at each end.
QuadraticFormCheck quadratic_form_check(const HiggsConfiguration& config, int k, const MatrixField& gamma, double t);

/// Ratio (lhs - ||d_A gamma||^2) / ||[phi, gamma]||^2 at the given t, i.e. the
/// constant in front of the commutator term.
double commutator_coefficient(const HiggsConfiguration& config, int k, const MatrixField& gamma, double t);

/// Classical eigenvalues of -(u'' + u'/r - n^2 u / r^2) with u'(a) = u'(b) = 0,
/// from the zeros of J_n'(ka) Y_n'(kb) - J_n'(kb) Y_n'(ka). For n = 0 the
/// constant mode (eigenvalue 0) is listed first.
std::vector<double> bessel_neumann_eigenvalues(int n, double a, double b, std::size_t count);

struct InverseNormRow {
  double t = 0.0;
  double min_singular = 0.0;  // over all modes |n| <= n_max
  int argmin_mode = 0;
  double inverse_norm = 0.0;  // 1 / min_singular, L^2 -> L^2
  double h2_bound = 0.0;      // 1 + max_n ||t^2 V|| ||L^{-1}||: bound for ||Delta_A L^{-1}||
  double h2_measured = 0.0;   // max_n ||Delta_A L_n^{-1}||
};

struct InverseNormOptions {
  int n_max = 16;
  BoundaryCondition bc = BoundaryCondition::neumann;
  bool measure_h2 = true;
};

struct InverseNormReport {
  std::vector<InverseNormRow> rows;
  int n_max = 16;
  double tail_bound = 0.0;  // lower bound (n_max + 1 - k)^2 / r_max^2 for the omitted modes
  bool tail_ok = true;      // tail_bound above every reported min_singular
};

InverseNormReport inverse_norm_report(const std::vector<double>& t_list,
                                      const std::function<RadialBackground(double)>& background,
                                      const InverseNormOptions& options = {});

struct ContractionOptions {
  int k = 1;
  std::size_t n_r = 513;
  std::size_t n_theta = 32;
  int n_max = 16;
  double threshold = 1e-2;
  std::optional<double> error_override;
  std::shared_ptr<const PolarGrid> grid;  // default: gluing_grid(t, t, k, epsilon, n_r, n_theta)
};

struct ContractionProbe {
  double t = 0.0;
  double epsilon = 0.0;
  double error_norm = 0.0;  // L^2 norm of the error term
  double error_sup = 0.0;
  double inverse_norm = 0.0;
  double product = 0.0;
  bool feasible = false;  // product < threshold
};

ContractionProbe contraction_probe(double t, double epsilon, const ContractionOptions& options = {});

}  // namespace hitchin
