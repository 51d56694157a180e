#include "hitchin/fiducial.hpp"

#include <cmath>
#include <sstream>

namespace hitchin {

namespace {

void check_k(int k) {
  if (k < 1) throw ContractError("fiducial: k must be a positive integer");
}

MatrixField diagonal_field(GridRef grid, const std::vector<double>& first, FormDegree degree) {
  const PolarGrid& g = as_polar(grid);
  MatrixField out(grid, degree);
  for (std::size_t i = 0; i < g.n_r(); ++i)
    for (std::size_t j = 0; j < g.n_theta(); ++j) {
      Mat2 m = Mat2::Zero();
      m(0, 0) = first[i];
      m(1, 1) = 1.0 / first[i];
      out[g.index(i, j)] = m;
    }
  return out;
}

// Exact d_zbar of diag(g1(r), 1/g1(r)) given d(log g1)/dr.
std::vector<Mat2> diagonal_dzbar(const PolarGrid& g, const std::vector<double>& g1, const std::vector<double>& dlog) {
  std::vector<Mat2> out(g.size(), Mat2::Zero());
  for (std::size_t i = 0; i < g.n_r(); ++i) {
    const double r = g.radial()[i];
    for (std::size_t j = 0; j < g.n_theta(); ++j) {
      const std::size_t idx = g.index(i, j);
      const Complex w = g.point(idx) / (2.0 * r);
      out[idx](0, 0) = w * dlog[i] * g1[i];
      out[idx](1, 1) = -w * dlog[i] / g1[i];
    }
  }
  return out;
}

}  // namespace

double connection_constant(ConnectionConstant c, int k) {
  return c == ConnectionConstant::k_over_8 ? k / 8.0 : 1.0 / 8.0;
}

FiducialSolution radial_pair(double t, int k, const std::shared_ptr<const PolarGrid>& grid, std::vector<double> h,
                             std::vector<double> h_prime, ConnectionConstant constant) {
  check_k(k);
  const PolarGrid& g = *grid;
  if (h.size() != g.n_r() || h_prime.size() != g.n_r())
    throw ContractError("radial_pair: profile length differs from the number of radial nodes");
  if (!(g.radial().r_min() > 0.0)) throw ContractError("radial_pair: grid must exclude r = 0");
  const GridRef ref = grid;
  const double c = connection_constant(constant, k);
  std::vector<double> f(g.n_r()), weight(g.n_r());
  for (std::size_t i = 0; i < g.n_r(); ++i) {
    const double r = g.radial()[i];
    f[i] = c + 0.25 * r * h_prime[i];
    weight[i] = std::pow(r, 0.5 * k) * std::exp(h[i]);
  }
  MatrixField a(ref, FormDegree::one_zero), phi(ref, FormDegree::one_zero);
  for (std::size_t i = 0; i < g.n_r(); ++i)
    for (std::size_t j = 0; j < g.n_theta(); ++j) {
      const std::size_t idx = g.index(i, j);
      const Complex z = g.point(idx);
      a[idx] = (f[i] / z) * pauli_z();
      Mat2 p = Mat2::Zero();
      p(0, 1) = weight[i];
      p(1, 0) = std::pow(z, k) / weight[i];
      phi[idx] = p;
    }
  HermitianMetricField metric(diagonal_field(ref, weight, FormDegree::zero), true);
  return FiducialSolution{t, k, std::nullopt, std::move(h), std::move(h_prime), std::move(f),
                          HiggsConfiguration(std::move(a), std::move(phi)), std::move(metric)};
}

FiducialSolution make_fiducial(const RadialProfile& profile, const std::shared_ptr<const PolarGrid>& grid,
                               ConnectionConstant constant) {
  if (!(profile.grid == grid->radial()))
    throw ContractError("make_fiducial: profile grid differs from the polar grid's radial nodes");
  FiducialSolution sol = radial_pair(profile.t, profile.k, grid, profile.h, profile.h_prime, constant);
  sol.profile = profile;
  return sol;
}

FiducialSolution make_fiducial(double t, int k, const std::shared_ptr<const PolarGrid>& grid,
                               const FiducialOptions& options) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ContractError("make_fiducial: t must be positive and finite");
  return make_fiducial(solve_bvp(t, k, grid->radial(), options.bvp), grid, options.constant);
}

FiducialSolution make_limiting(int k, const std::shared_ptr<const PolarGrid>& grid) {
  const std::size_t n = grid->n_r();
  return radial_pair(kTInfinity, k, grid, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0));
}

std::shared_ptr<const PolarGrid> fiducial_grid(double t_min, double t_max, int k, std::size_t n_r, std::size_t n_theta,
                                               double rho_max, double r_max_at_least) {
  if (!(t_min > 0.0) || !(t_max >= t_min)) throw ContractError("fiducial_grid: need 0 < t_min <= t_max");
  const double r_min = std::min(1e-3, r_of_rho(1e-2, t_max, k));
  const double r_max = std::max(r_of_rho(rho_max, t_min, k), r_max_at_least);
  return std::make_shared<const PolarGrid>(RadialGrid::log_uniform(r_min, r_max, n_r), n_theta);
}

GaugeTransformField g_infinity(int k, const std::shared_ptr<const PolarGrid>& grid) {
  check_k(k);
  const PolarGrid& g = *grid;
  if (!(g.radial().r_min() > 0.0)) throw ContractError("g_infinity: grid must exclude r = 0");
  std::vector<double> g1(g.n_r()), dlog(g.n_r());
  for (std::size_t i = 0; i < g.n_r(); ++i) {
    const double r = g.radial()[i];
    g1[i] = std::pow(r, -0.25 * k);
    dlog[i] = -0.25 * k / r;
  }
  return GaugeTransformField(diagonal_field(grid, g1, FormDegree::zero), diagonal_dzbar(g, g1, dlog));
}

GaugeTransformField g_fiducial(const FiducialSolution& sol) {
  const auto grid = std::get<std::shared_ptr<const PolarGrid>>(sol.config.grid());
  const PolarGrid& g = *grid;
  std::vector<double> g1(g.n_r()), dlog(g.n_r());
  for (std::size_t i = 0; i < g.n_r(); ++i) {
    const double r = g.radial()[i];
    g1[i] = std::pow(r, -0.25 * sol.k) * std::exp(-0.5 * sol.h[i]);
    dlog[i] = -0.25 * sol.k / r - 0.5 * sol.h_prime[i];
  }
  return GaugeTransformField(diagonal_field(grid, g1, FormDegree::zero), diagonal_dzbar(g, g1, dlog));
}

HiggsConfiguration standard_pair(int k, const std::shared_ptr<const PolarGrid>& grid) {
  check_k(k);
  MatrixField phi = MatrixField::sample(grid, FormDegree::one_zero, [k](Complex z) {
    Mat2 m = Mat2::Zero();
    m(0, 1) = 1.0;
    m(1, 0) = std::pow(z, k);
    return m;
  });
  return with_trivial_connection(std::move(phi));
}

LimitingConfiguration limiting_configuration(int k, const std::shared_ptr<const PolarGrid>& grid, const Mat2& u) {
  if ((u * u.adjoint() - Mat2::Identity()).norm() > 1e-12)
    throw ContractError("limiting_configuration: frame matrix is not unitary");
  const GridRef ref = grid;
  const std::vector<Mat2> zero(grid->size(), Mat2::Zero());
  const FiducialSolution lim = make_limiting(k, grid);
  HiggsConfiguration config =
      gauge_apply(GaugeTransformField(MatrixField::constant(ref, FormDegree::zero, u), zero), lim.config);
  GaugeTransformField frame(MatrixField::constant(ref, FormDegree::zero, u.adjoint()), zero);
  return {std::move(config), {Puncture{0.0, k}}, {std::move(frame)}};
}

double frame_defect(const LimitingConfiguration& lc) {
  const auto grid = std::get<std::shared_ptr<const PolarGrid>>(lc.config.grid());
  double worst = 0.0;
  for (std::size_t j = 0; j < lc.punctures.size(); ++j) {
    const HiggsConfiguration normal = gauge_apply(lc.frames[j], lc.config);
    const FiducialSolution lim = make_limiting(lc.punctures[j].k, grid);
    worst = std::max({worst, max_difference(normal.a, lim.config.a), max_difference(normal.phi, lim.config.phi)});
  }
  return worst;
}

DecoupledNorms verify_decoupled(const HiggsConfiguration& config, RadialInterval region) {
  const PolarGrid& g = as_polar(config.grid());
  const RadialGrid& rg = g.radial();
  if (rg.size() < 8 || region.lo < rg[3] || region.hi > rg[rg.size() - 4]) {
    std::ostringstream os;
    os << "verify_decoupled: region [" << region.lo << ", " << region.hi
       << "] must stay 3 radial cells inside the grid";
    throw ContractError(os.str());
  }
  return {norms(curvature(config), region), norms(bracket_term(config.phi, config.background), region),
          norms(dbar_A_phi(config), region)};
}

DecoupledNorms verify_decoupled(const LimitingConfiguration& lc, RadialInterval region) {
  for (const auto& p : lc.punctures) {
    if (std::abs(p.z) != 0.0) throw ContractError("verify_decoupled: only punctures at the grid centre are supported");
  }
  return verify_decoupled(lc.config, region);
}

ConvergenceReport convergence_report(const std::vector<double>& t_list, int k, RadialInterval region,
                                     const ConvergenceOptions& options) {
  check_k(k);
  if (t_list.empty()) throw ContractError("convergence_report: empty t list");
  if (!(region.lo > 0.0) || !(region.hi > region.lo)) throw ContractError("convergence_report: invalid annulus");
  double t_min = kTInfinity, t_max = 0.0;
  for (double t : t_list) {
    if (!(t > 0.0)) throw ContractError("convergence_report: t values must be positive");
    if (std::isfinite(t)) {
      t_min = std::min(t_min, t);
      t_max = std::max(t_max, t);
    }
  }
  ConvergenceReport rep;
  rep.expected_rate = rho_of(region.lo, 1.0, k);
  if (t_max == 0.0) {
    for (double t : t_list) rep.rows.push_back({t, 0.0, 0.0});
    return rep;
  }
  rep.asymptotic_window = rho_of(region.lo, t_min, k) >= 2.0;
  const auto grid = fiducial_grid(t_min, t_max, k, options.n_r, options.n_theta, 12.0, region.hi);
  const FiducialSolution lim = make_limiting(k, grid);
  double sx = 0, sa = 0, sp = 0, sxx = 0, sxa = 0, sxp = 0;
  std::size_t n = 0;
  for (double t : t_list) {
    ConvergenceRow row{t, 0.0, 0.0};
    if (std::isfinite(t)) {
      const FiducialSolution sol = make_fiducial(t, k, grid);
      row.distance_a = max_difference(sol.config.a, lim.config.a, region);
      row.distance_phi = max_difference(sol.config.phi, lim.config.phi, region);
      if (row.distance_a > 0.0 && row.distance_phi > 0.0) {
        const double la = std::log(row.distance_a), lp = std::log(row.distance_phi);
        sx += t;
        sxx += t * t;
        sa += la;
        sp += lp;
        sxa += t * la;
        sxp += t * lp;
        ++n;
      }
    }
    if (!rep.rows.empty()) {
      const auto& prev = rep.rows.back();
      if (!(row.distance_a < prev.distance_a) || !(row.distance_phi < prev.distance_phi)) rep.monotone = false;
    }
    rep.rows.push_back(row);
  }
  if (n >= 2) {
    const double dn = static_cast<double>(n), den = dn * sxx - sx * sx;
    rep.rate_a = -(dn * sxa - sx * sa) / den;
    rep.rate_phi = -(dn * sxp - sx * sp) / den;
  }
  return rep;
}

}  // namespace hitchin
