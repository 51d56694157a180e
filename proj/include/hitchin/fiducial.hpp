#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "hitchin/higgs.hpp"
#include "hitchin/painleve.hpp"

namespace hitchin {

inline constexpr double kTInfinity = std::numeric_limits<double>::infinity();

/// Constant term of the connection coefficient f = c + r h'/4.
enum class ConnectionConstant {
  k_over_8,  // c = k/8: smooth at the origin and tends to the limiting value
  one_eighth,  // c = 1/8 for every k, as literally displayed for general k
};

struct FiducialOptions {
  ConnectionConstant constant = ConnectionConstant::k_over_8;
  BvpOptions bvp;
};

/// Rotationally symmetric pair built from a radial profile h and connection
/// coefficient f:  a = f sigma_3 / z,  phi = [[0, r^{k/2} e^h], [z^k r^{-k/2} e^{-h}, 0]].
struct FiducialSolution {
  double t = kTInfinity;
  int k = 1;
  std::optional<RadialProfile> profile;  // empty for t = infinity
  std::vector<double> h;  // per radial node of the polar grid
  std::vector<double> h_prime;
  std::vector<double> f;  // c + r h'/4
  HiggsConfiguration config;
  HermitianMetricField metric;  // diag(r^{k/2} e^h, r^{-k/2} e^{-h})

  bool is_limit() const { return t == kTInfinity; }
  const PolarGrid& grid() const { return as_polar(config.grid()); }
};

double connection_constant(ConnectionConstant c, int k);

/// Assemble the pair for arbitrary radial data h, h' (used for blended profiles).
FiducialSolution radial_pair(double t, int k, const std::shared_ptr<const PolarGrid>& grid, std::vector<double> h,
                             std::vector<double> h_prime, ConnectionConstant constant = ConnectionConstant::k_over_8);

/// Solves the radial ODE on the polar grid's radial nodes and assembles the pair.
/// The radial grid must satisfy the ODE solver's rho window.
FiducialSolution make_fiducial(double t, int k, const std::shared_ptr<const PolarGrid>& grid,
                               const FiducialOptions& options = {});
/// Same, from an already computed profile on the polar grid's radial nodes.
FiducialSolution make_fiducial(const RadialProfile& profile, const std::shared_ptr<const PolarGrid>& grid,
                               ConnectionConstant constant = ConnectionConstant::k_over_8);

/// t = infinity: h = 0, f = k/8, H = diag(r^{k/2}, r^{-k/2}). Requires r_min > 0.
FiducialSolution make_limiting(int k, const std::shared_ptr<const PolarGrid>& grid);

/// Polar grid covering the rho window of every t in [t_min, t_max]:
/// rho(r_min, t_max) <= 1e-2 and rho(r_max, t_min) >= rho_max.
std::shared_ptr<const PolarGrid> fiducial_grid(double t_min, double t_max, int k, std::size_t n_r, std::size_t n_theta,
                                               double rho_max = 12.0, double r_max_at_least = 0.0);

/// diag(|z|^{-k/4}, |z|^{k/4}) with its exact dz-bar derivative.
GaugeTransformField g_infinity(int k, const std::shared_ptr<const PolarGrid>& grid);
/// diag(r^{-k/4} e^{-h/2}, r^{k/4} e^{h/2}); g g^* = H^{-1}. The dz-bar derivative uses the profile's h'.
GaugeTransformField g_fiducial(const FiducialSolution& sol);

/// phi_k = [[0, 1], [z^k, 0]] with the trivial connection.
HiggsConfiguration standard_pair(int k, const std::shared_ptr<const PolarGrid>& grid);

struct Puncture {
  Complex z;
  int k = 1;
};

/// Pair solving the decoupled equations away from punctures. `frames[j]` maps the
/// pair to the limiting normal form near puncture j: gauge_apply(frames[j], config)
/// agrees with make_limiting(k_j) there.
struct LimitingConfiguration {
  HiggsConfiguration config;
  std::vector<Puncture> punctures;
  std::vector<GaugeTransformField> frames;
};

/// Local model with one puncture at the origin; the pair is the limiting normal
/// form written in the constant unitary frame u (identity by default).
LimitingConfiguration limiting_configuration(int k, const std::shared_ptr<const PolarGrid>& grid,
                                             const Mat2& u = Mat2::Identity());

/// Largest deviation from the normal form over the frame certificates.
double frame_defect(const LimitingConfiguration& lc);

struct DecoupledNorms {
  Norms curvature;  // F_A
  Norms bracket;    // [phi, phi^*]
  Norms holomorphic;  // dbar_A phi
};

/// The region must stay at least 3 radial cells away from both ends of the grid.
DecoupledNorms verify_decoupled(const HiggsConfiguration& config, RadialInterval region);
DecoupledNorms verify_decoupled(const LimitingConfiguration& lc, RadialInterval region);

struct ConvergenceRow {
  double t = 0.0;
  double distance_a = 0.0;
  double distance_phi = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double rate_a = 0.0;  // least-squares slope of -log distance against t
  double rate_phi = 0.0;
  double expected_rate = 0.0;  // rho(lo) / t
  bool monotone = true;
  bool asymptotic_window = true;  // rho(inner radius) >= 2 at the smallest t
};

struct ConvergenceOptions {
  std::size_t n_r = 1025;
  std::size_t n_theta = 16;
};

/// Sup distances of the fiducial pair to the limiting pair over the annulus, per t.
/// Rows with t = infinity have distance 0 and are excluded from the fit.
ConvergenceReport convergence_report(const std::vector<double>& t_list, int k, RadialInterval region,
                                     const ConvergenceOptions& options = {});

}  // namespace hitchin
