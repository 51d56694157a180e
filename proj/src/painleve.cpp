#include "hitchin/painleve.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <boost/numeric/odeint.hpp>

namespace hitchin {

double rho_of(double r, double t, int k) {
  const double p = 0.5 * k + 1.0;
  return 4.0 * t * std::pow(r, p) / p;
}

double r_of_rho(double rho, double t, int k) {
  const double p = 0.5 * k + 1.0;
  return std::pow(rho * p / (4.0 * t), 1.0 / p);
}

RadialGrid default_radial_grid(double t, int k, std::size_t n, double rho_max) {
  const double r_min = std::min(1e-3, r_of_rho(1e-2, t, k));
  return RadialGrid::log_uniform(r_min, r_of_rho(rho_max, t, k), n);
}

std::vector<double> RadialProfile::r_h_prime() const {
  std::vector<double> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = grid[i] * h_prime[i];
  return out;
}

namespace {

void check_inputs(double t, int k) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ContractError("painleve: t must be positive and finite");
  if (k < 1) throw ContractError("painleve: k must be a positive integer");
}

void check_window(double t, int k, double r_min, double r_max) {
  const double rho_hi = rho_of(r_max, t, k), rho_lo = rho_of(r_min, t, k);
  if (rho_hi < 12.0 * (1.0 - 1e-9)) {
    std::ostringstream os;
    os << "painleve: rho(r_max) = " << rho_hi << " < 12; enlarge r_max";
    throw ContractError(os.str());
  }
  if (rho_lo > 1e-2 * (1.0 + 1e-9)) {
    std::ostringstream os;
    os << "painleve: rho(r_min) = " << rho_lo << " > 1e-2; shrink r_min";
    throw ContractError(os.str());
  }
}

double stencil_apply(const Stencil& s, const std::vector<double>& v) {
  return s.weights[0] * v[s.offset] + s.weights[1] * v[s.offset + 1] + s.weights[2] * v[s.offset + 2];
}

// Stencils for r d/dr and (r d/dr)^2. On log-uniform grids these are the
// uniform stencils in s = log r; otherwise they are built from the r stencils.
struct EulerStencils {
  const RadialGrid& grid;

  Stencil r_dr(std::size_t i) const {
    const std::size_t n = grid.size();
    if (grid.spacing() == Spacing::uniform_log_r) {
      const double ds = std::log(grid[1] / grid[0]);
      if (i == 0) return {0, {-1.5 / ds, 2.0 / ds, -0.5 / ds}};
      if (i + 1 == n) return {n - 3, {0.5 / ds, -2.0 / ds, 1.5 / ds}};
      return {i - 1, {-0.5 / ds, 0.0, 0.5 / ds}};
    }
    Stencil s = grid.first_derivative(i);
    for (double& w : s.weights) w *= grid[i];
    return s;
  }

  // Interior nodes only.
  Stencil r_dr_squared(std::size_t i) const {
    if (grid.spacing() == Spacing::uniform_log_r) {
      const double ds = std::log(grid[1] / grid[0]);
      const double w = 1.0 / (ds * ds);
      return {i - 1, {w, -2.0 * w, w}};
    }
    const Stencil a = grid.second_derivative(i);
    const Stencil b = grid.first_derivative(i);
    const double r = grid[i];
    Stencil s{a.offset, {}};
    for (std::size_t m = 0; m < 3; ++m) s.weights[m] = r * r * a.weights[m] + r * b.weights[m];
    return s;
  }
};

struct Collocation {
  const RadialGrid& grid;
  double t;
  int k;
  RegularityCondition regularity;
  EulerStencils euler{grid};

  double regularity_correction(double r0, double h0) const {
    if (regularity == RegularityCondition::indicial) return 0.0;
    return 2.0 * t * t * std::pow(r0, 2.0 + k) * std::exp(2.0 * h0);
  }

  std::vector<double> residual(const std::vector<double>& h) const {
    const std::size_t n = grid.size();
    std::vector<double> res(n, 0.0);
    const double r0 = grid[0];
    res[0] = stencil_apply(euler.r_dr(0), h) + 0.5 * k - regularity_correction(r0, h[0]);
    for (std::size_t i = 1; i + 1 < n; ++i)
      res[i] = stencil_apply(euler.r_dr_squared(i), h) - 8.0 * t * t * std::pow(grid[i], k + 2.0) * std::sinh(2.0 * h[i]);
    res[n - 1] = h[n - 1];
    return res;
  }

  Eigen::SparseMatrix<double> jacobian(const std::vector<double>& h) const {
    const std::size_t n = grid.size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(3 * n);
    const double r0 = grid[0];
    const Stencil s0 = euler.r_dr(0);
    for (std::size_t m = 0; m < 3; ++m) {
      double w = s0.weights[m];
      if (s0.offset + m == 0 && regularity == RegularityCondition::series_corrected)
        w -= 2.0 * regularity_correction(r0, h[0]);
      trip.emplace_back(0, static_cast<int>(s0.offset + m), w);
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const Stencil a = euler.r_dr_squared(i);
      std::array<double, 3> w = a.weights;
      w[1] -= 16.0 * t * t * std::pow(grid[i], k + 2.0) * std::cosh(2.0 * h[i]);
      for (std::size_t m = 0; m < 3; ++m) trip.emplace_back(static_cast<int>(i), static_cast<int>(a.offset + m), w[m]);
    }
    trip.emplace_back(static_cast<int>(n - 1), static_cast<int>(n - 1), 1.0);
    Eigen::SparseMatrix<double> jac(static_cast<int>(n), static_cast<int>(n));
    jac.setFromTriplets(trip.begin(), trip.end());
    return jac;
  }
};

double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

Spacing detect_spacing(std::span<const double> r) {
  if (r.size() < 3) return Spacing::uniform_r;
  const double q = r[1] / r[0];
  for (std::size_t i = 2; i < r.size(); ++i)
    if (std::abs(r[i] / r[i - 1] - q) > 1e-9 * q) return Spacing::uniform_r;
  return Spacing::uniform_log_r;
}

}  // namespace

RadialProfile solve_bvp(double t, int k, const RadialGrid& grid, const BvpOptions& options) {
  check_inputs(t, k);
  if (options.check_preconditions) check_window(t, k, grid.r_min(), grid.r_max());
  const std::size_t n = grid.size();
  const Collocation col{grid, t, k, options.regularity};

  const double r_knee = r_of_rho(1.0, t, k);
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = -0.5 * k * std::log(grid[i] / (grid[i] + r_knee));

  std::vector<double> history;
  std::vector<double> res = col.residual(h);
  double norm = sup_abs(res);
  history.push_back(norm);
  bool converged = false;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (int it = 0; it < options.max_iterations; ++it) {
    Eigen::SparseMatrix<double> jac = col.jacobian(h);
    lu.compute(jac);
    if (lu.info() != Eigen::Success) throw SolverError("solve_bvp: singular Newton Jacobian", history);
    Eigen::Map<const Eigen::VectorXd> rv(res.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd step = lu.solve(-rv);

    double lambda = 1.0;
    std::vector<double> trial(n), trial_res;
    double trial_norm = 0.0;
    for (;;) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = h[i] + lambda * step[static_cast<Eigen::Index>(i)];
      trial_res = col.residual(trial);
      trial_norm = sup_abs(trial_res);
      if (std::isfinite(trial_norm) && (trial_norm <= norm || norm <= options.residual_tolerance || lambda < 1.0 / 1024.0))
        break;
      lambda *= 0.5;
    }
    h = std::move(trial);
    res = std::move(trial_res);
    norm = trial_norm;
    history.push_back(norm);

    const double step_size = lambda * step.cwiseAbs().maxCoeff();
    double h_scale = 1.0;
    for (double v : h) h_scale = std::max(h_scale, std::abs(v));
    if (step_size <= options.step_tolerance * h_scale && norm <= options.residual_tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "solve_bvp: Newton did not converge in " << options.max_iterations << " iterations (t=" << t << ", k=" << k
       << ", final residual " << norm << ")";
    throw SolverError(os.str(), history);
  }

  RadialProfile p{grid, std::move(h), std::vector<double>(n), t, k, 0.0, std::move(history)};
  p.h.back() = 0.0;
  const EulerStencils euler{grid};
  for (std::size_t i = 0; i < n; ++i) p.h_prime[i] = stencil_apply(euler.r_dr(i), p.h) / grid[i];
  const double u0 = p.h[0] + 0.5 * k * std::log(grid[0]);
  p.indicial_constant = u0 - t * t * std::exp(2.0 * u0) * grid[0] * grid[0];
  return p;
}

std::vector<double> ode_residual(const RadialProfile& p) {
  const auto& g = p.grid;
  const EulerStencils euler{g};
  std::vector<double> res(g.size(), 0.0);
  for (std::size_t i = 1; i + 1 < g.size(); ++i)
    res[i] = stencil_apply(euler.r_dr_squared(i), p.h) - 8.0 * p.t * p.t * std::pow(g[i], p.k + 2.0) * std::sinh(2.0 * p.h[i]);
  return res;
}

double ode_residual_sup(const RadialProfile& p) { return sup_abs(ode_residual(p)); }

// --- shooting oracle ---------------------------------------------------------

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::array<double, 2>;

struct Escaped {
  double sign;
};

/// |h| beyond this means the trajectory left the decaying branch.
constexpr double kEscape = 40.0;

struct LogRadialSystem {
  double t;
  int k;
  // s = log r; h_ss = 8 t^2 r^{k+2} sinh(2h).
  void operator()(const State& y, State& dy, double s) const {
    if (!(std::abs(y[0]) <= kEscape)) throw Escaped{y[0] > 0 ? 1.0 : -1.0};
    dy[0] = y[1];
    dy[1] = 8.0 * t * t * std::exp((k + 2.0) * s) * std::sinh(2.0 * y[0]);
  }
};

// Regular expansion at small r: u = h + (k/2) log r = c + a2 r^2 + a4 r^4 + b r^{2k+2}.
State launch_state(double c, double t, int k, double r0) {
  const double e = std::exp(2.0 * c);
  const double a2 = t * t * e;
  const double a4 = 0.5 * t * t * t * t * e * e;
  const double b = -4.0 * t * t / (e * (2.0 * k + 2.0) * (2.0 * k + 2.0));
  const double r2 = r0 * r0;
  const double rk = std::pow(r0, 2.0 * k + 2.0);
  const double u = c + a2 * r2 + a4 * r2 * r2 + b * rk;
  const double r_du = 2.0 * a2 * r2 + 4.0 * a4 * r2 * r2 + (2.0 * k + 2.0) * b * rk;
  return {u - 0.5 * k * std::log(r0), -0.5 * k + r_du};
}


auto make_stepper(double tol) {
  return odeint::make_controlled(tol, tol, odeint::runge_kutta_fehlberg78<State>());
}

// Integrates from the launch radius through log-radial `times`; returns h at the last
// time, or +-1e3 when the trajectory escapes. `states` (optional) receives every stop.
double shoot(double c, double t, int k, const std::vector<double>& times, double tol,
             std::vector<State>* states = nullptr) {
  State y = launch_state(c, t, k, std::exp(times.front()));
  if (states) states->clear();
  try {
    odeint::integrate_times(make_stepper(tol), LogRadialSystem{t, k}, y, times.begin(), times.end(),
                            (times[1] - times[0]) * 1e-3, [states](const State& x, double) {
                              if (states) states->push_back(x);
                            });
  } catch (const Escaped& e) {
    return e.sign * 1e3;
  }
  return y[0];
}

}  // namespace

RadialProfile shooting_oracle(double t, int k, std::span<const double> r_eval, const OracleOptions& options) {
  check_inputs(t, k);
  if (r_eval.size() < 3) throw ContractError("shooting_oracle: need at least 3 evaluation radii");
  std::vector<double> radii(r_eval.begin(), r_eval.end());
  RadialGrid grid(radii, detect_spacing(r_eval));
  check_window(t, k, grid.r_min(), grid.r_max());
  const double r0 = std::min(options.launch_radius, 0.1 * grid.r_min());
  const double tol = options.tolerance;
  // The bisection runs on the same stops as the reported trajectory, so the growing mode
  // is fixed by h(r_max) = 0 on exactly the path that is returned.
  std::vector<double> times;
  times.reserve(radii.size() + 1);
  times.push_back(std::log(r0));
  for (double r : radii) times.push_back(std::log(r));

  double lo = -1.0, hi = 1.0;
  for (int i = 0; shoot(lo, t, k, times, tol) >= 0.0; ++i) {
    if (i > 60) throw SolverError("shooting_oracle: cannot bracket the indicial constant from below", {});
    lo -= 1.0 + std::abs(lo);
  }
  for (int i = 0; shoot(hi, t, k, times, tol) <= 0.0; ++i) {
    if (i > 60) throw SolverError("shooting_oracle: cannot bracket the indicial constant from above", {});
    hi += 1.0 + std::abs(hi);
  }
  std::vector<double> history;
  for (int i = 0; i < 200 && hi - lo > 4e-16 * std::max(1.0, std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f = shoot(mid, t, k, times, tol);
    history.push_back(f);
    (f > 0.0 ? hi : lo) = mid;
  }
  // Of the two bracket ends, keep the one that lands closer to h(r_max) = 0.
  std::vector<State> states, other;
  const double f_lo = shoot(lo, t, k, times, tol, &states);
  const double f_hi = shoot(hi, t, k, times, tol, &other);
  double c = lo;
  if (std::abs(f_hi) < std::abs(f_lo)) {
    c = hi;
    states.swap(other);
  }
  if (states.size() != times.size()) throw SolverError("shooting_oracle: converged trajectory escaped before r_max", history);
  RadialProfile p{grid, std::vector<double>(radii.size()), std::vector<double>(radii.size()), t, k, c, history};
  for (std::size_t i = 0; i < radii.size(); ++i) {
    p.h[i] = states[i + 1][0];
    p.h_prime[i] = states[i + 1][1] / radii[i];
  }
  return p;
}

// --- Painleve III form --------------------------------------------------------

PainleveProfile to_painleve(const RadialProfile& profile) {
  PainleveProfile p;
  p.k = profile.k;
  p.rho.resize(profile.h.size());
  p.psi = profile.h;
  for (std::size_t i = 0; i < p.rho.size(); ++i) p.rho[i] = rho_of(profile.grid[i], profile.t, profile.k);
  return p;
}

std::vector<double> painleve_residual_values(const PainleveProfile& p) {
  if (p.rho.size() < 5 || p.rho.size() != p.psi.size()) throw ContractError("painleve_residual: need >= 5 nodes");
  const RadialGrid g(p.rho, Spacing::uniform_r);
  std::vector<double> res(p.rho.size(), 0.0);
  for (std::size_t i = 1; i + 1 < p.rho.size(); ++i) {
    const double x = p.rho[i];
    res[i] = x * x * stencil_apply(g.second_derivative(i), p.psi) + x * stencil_apply(g.first_derivative(i), p.psi) -
             0.5 * x * x * std::sinh(2.0 * p.psi[i]);
  }
  return res;
}

Norms painleve_residual(const PainleveProfile& p) {
  const auto res = painleve_residual_values(p);
  Norms out;
  double sum = 0.0;
  for (std::size_t i = 0; i < res.size(); ++i) {
    out.sup = std::max(out.sup, std::abs(res[i]));
    if (i + 1 < res.size()) {
      const double dx = p.rho[i + 1] - p.rho[i];
      sum += 0.5 * dx * (res[i] * res[i] + res[i + 1] * res[i + 1]);
    }
  }
  out.l2 = std::sqrt(sum);
  return out;
}

double interpolate_psi(const PainleveProfile& p, double rho) {
  if (rho < p.rho.front() || rho > p.rho.back()) throw ContractError("interpolate_psi: rho outside the profile");
  const auto it = std::upper_bound(p.rho.begin(), p.rho.end(), rho);
  const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - p.rho.begin()), p.rho.size() - 1);
  const std::size_t i = j - 1;
  // Quadratic through three neighbours keeps the interpolation error below the collocation error.
  const std::size_t a = (i + 2 < p.rho.size()) ? i : i - 1;
  double v = 0.0;
  for (std::size_t m = 0; m < 3; ++m) {
    double w = 1.0;
    for (std::size_t l = 0; l < 3; ++l)
      if (l != m) w *= (rho - p.rho[a + l]) / (p.rho[a + m] - p.rho[a + l]);
    v += w * p.psi[a + m];
  }
  return v;
}

DecayFit decay_fit(const PainleveProfile& p, double rho_lo, double rho_hi) {
  if (!(rho_hi > rho_lo)) throw ContractError("decay_fit: empty window");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < p.rho.size(); ++i) {
    const double x = p.rho[i];
    if (x < rho_lo || x > rho_hi) continue;
    if (!(p.psi[i] > 0.0)) {
      std::ostringstream os;
      os << "decay_fit: non-positive profile value at rho = " << x;
      throw ContractError(os.str());
    }
    const double y = std::log(p.psi[i]) + 0.5 * std::log(x);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 3) throw ContractError("decay_fit: fewer than 3 samples in window");
  const double dn = static_cast<double>(n);
  const double slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / dn;
  return {-slope, std::exp(intercept), n};
}

DecayFit decay_fit(const RadialProfile& profile, double rho_lo, double rho_hi) {
  const double rho_max = rho_of(profile.grid.r_max(), profile.t, profile.k);
  if (rho_lo < 4.0 - 1e-12 || rho_hi > 0.9 * rho_max + 1e-12)
    throw ContractError("decay_fit: window must lie in [4, 0.9 rho(r_max)]");
  return decay_fit(to_painleve(profile), rho_lo, rho_hi);
}

}  // namespace hitchin
