#pragma once

#include <span>
#include <vector>

#include "hitchin/calculus.hpp"
#include "hitchin/grid.hpp"

namespace hitchin {

/// rho = 4 t r^{k/2+1} / (k/2+1); equals (8/3) t r^{3/2} for k = 1.
double rho_of(double r, double t, int k);
/// Inverse of rho_of in r.
double r_of_rho(double rho, double t, int k);

/// Log-uniform radial grid with rho(r_max) = rho_max and r_min = min(1e-3, r(rho = 1e-2)).
RadialGrid default_radial_grid(double t, int k, std::size_t n, double rho_max = 12.0);

/// Decaying positive solution h of h'' + h'/r = 8 t^2 r^k sinh(2h) sampled on a grid.
struct RadialProfile {
  RadialGrid grid;
  std::vector<double> h;
  std::vector<double> h_prime;
  double t = 1.0;
  int k = 1;
  /// Limit of h + (k/2) log r as r -> 0, read off at r_min.
  double indicial_constant = 0.0;
  std::vector<double> newton_history;  // sup residual per Newton iterate

  std::vector<double> r_h_prime() const;
};

/// Same profile in the Painleve III variable rho.
struct PainleveProfile {
  std::vector<double> rho;
  std::vector<double> psi;
  int k = 1;
};

enum class RegularityCondition {
  /// r h'(r_min) = -k/2 exactly.
  indicial,
  /// r h'(r_min) = -k/2 + 2 t^2 r_min^2 e^{2u}, u = h + (k/2) log r: the first
  /// term of the regular expansion at r = 0.
  series_corrected,
};

struct BvpOptions {
  RegularityCondition regularity = RegularityCondition::series_corrected;
  int max_iterations = 50;
  double step_tolerance = 1e-11;
  double residual_tolerance = 1e-9;
  /// Skip the rho-window precondition checks (used for deliberately coarse studies).
  bool check_preconditions = true;
};

/// Newton iteration on the second-order collocation of the radial ODE with a
/// regularity (Robin) condition at r_min and h(r_max) = 0.
/// Throws SolverError with the residual history when Newton stalls.
RadialProfile solve_bvp(double t, int k, const RadialGrid& grid, const BvpOptions& options = {});

/// Collocation residual r^2 (h'' + h'/r - 8 t^2 r^k sinh 2h) at interior nodes,
/// using the grid stencils (zero at the two boundary nodes). The r^2 weight is the
/// log-radial form of the operator and keeps the residual at round-off scale near r_min.
std::vector<double> ode_residual(const RadialProfile& profile);
double ode_residual_sup(const RadialProfile& profile);

struct OracleOptions {
  double tolerance = 1e-12;
  /// Radius where the regular expansion is evaluated to launch the integration.
  double launch_radius = 1e-5;
};

/// Independent solver: bisection on the indicial constant c of the regular
/// expansion h = -(k/2) log r + c + ..., integrating with an adaptive
/// Runge-Kutta-Fehlberg 7(8) scheme toward h(r_max) = 0, r_max = max(r_eval).
RadialProfile shooting_oracle(double t, int k, std::span<const double> r_eval, const OracleOptions& options = {});

PainleveProfile to_painleve(const RadialProfile& profile);

/// rho^2 (psi'' + psi'/rho - sinh(2 psi)/2) with three-point stencils on the rho nodes.
std::vector<double> painleve_residual_values(const PainleveProfile& p);
Norms painleve_residual(const PainleveProfile& p);

struct DecayFit {
  double rate = 0.0;
  double amplitude = 0.0;
  std::size_t samples = 0;
};

/// Least-squares fit log h = log A - rate * rho - (1/2) log rho on rho in [lo, hi].
DecayFit decay_fit(const PainleveProfile& p, double rho_lo, double rho_hi);
DecayFit decay_fit(const RadialProfile& profile, double rho_lo, double rho_hi);

/// Linear interpolation of psi at rho (p.rho increasing).
double interpolate_psi(const PainleveProfile& p, double rho);

}  // namespace hitchin
