// One line per acceptance criterion: PASS/FAIL, the measured values and the wall time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "hitchin/fiducial.hpp"
#include "hitchin/gluing.hpp"
#include "hitchin/hyperkahler.hpp"
#include "hitchin/painleve.hpp"

using namespace hitchin;

namespace {

using PolarRef = std::shared_ptr<const PolarGrid>;

PolarRef uniform_polar(double lo, double hi, std::size_t n_r, std::size_t n_theta) {
  return std::make_shared<const PolarGrid>(RadialGrid::uniform(lo, hi, n_r), n_theta);
}

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

// ---------------------------------------------------------------------------

Outcome ode_correctness() {
  Outcome o;
  double worst_res = 0.0, worst_oracle = 0.0;
  for (int k : {1, 2}) {
    for (double t : {1.0, 2.0, 4.0, 8.0}) {
      const RadialGrid grid = default_radial_grid(t, k, 2049);
      const RadialProfile col = solve_bvp(t, k, grid);
      const RadialProfile orc = shooting_oracle(t, k, grid.nodes());
      double diff = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) diff = std::max(diff, std::abs(col.h[i] - orc.h[i]));
      worst_res = std::max(worst_res, ode_residual_sup(col));
      worst_oracle = std::max(worst_oracle, diff);
    }
  }
  o.require(worst_res <= 1e-8, "collocation residual");
  o.require(worst_oracle <= 1e-6, "oracle agreement");
  o.detail << "max residual " << worst_res << ", max |collocation - shooting| " << worst_oracle;
  return o;
}

Outcome painleve_reduction() {
  Outcome o;
  const auto q1 = to_painleve(solve_bvp(1.0, 1, default_radial_grid(1.0, 1, 2049)));
  const auto q4 = to_painleve(solve_bvp(4.0, 1, default_radial_grid(4.0, 1, 2049)));
  double worst = 0.0;
  for (int i = 0; i <= 700; ++i) {
    const double rho = 1.0 + 0.01 * i;
    worst = std::max(worst, std::abs(interpolate_psi(q1, rho) - interpolate_psi(q4, rho)));
  }
  o.require(worst <= 1e-5, "collapse");
  double min_order = 1e300;
  for (double t : {1.0, 4.0}) {
    const RadialGrid g = default_radial_grid(t, 1, 257);
    const double e0 = painleve_residual(to_painleve(solve_bvp(t, 1, g))).sup;
    const double e1 = painleve_residual(to_painleve(solve_bvp(t, 1, g.refined()))).sup;
    min_order = std::min(min_order, std::log2(e0 / e1));
  }
  o.require(min_order >= 1.9, "residual order");
  o.detail << "max |psi_1 - psi_4| on rho in [1,8] " << worst << ", residual order " << min_order;
  return o;
}

Outcome limiting_metric() {
  Outcome o;
  double bracket_scaled = 0.0, min_ratio = 1e300, prev = 0.0;
  for (std::size_t n : {157, 313, 625}) {
    const auto g = uniform_polar(0.1, 4.0, n, 32);
    const FiducialSolution lim = make_limiting(1, g);
    const HiggsConfiguration phi1 = standard_pair(1, g);
    const MatrixField b = bracket_term(phi1.phi, lim.metric);
    for (std::size_t i = 0; i < b.size(); ++i)
      bracket_scaled = std::max(bracket_scaled, b[i].norm() / std::max(1.0, g->radius(i)));
    const double curv = norms(chern_curvature(lim.metric), {0.2, 2.0}).sup;
    if (prev > 0.0) min_ratio = std::min(min_ratio, prev / curv);
    prev = curv;
  }
  o.require(bracket_scaled <= 1e-13, "bracket vanishes");
  o.require(min_ratio >= 3.5, "curvature ratio");
  o.detail << "max |[phi, phi*]| / max(1, r) " << bracket_scaled << ", min curvature ratio per halving " << min_ratio;
  return o;
}

Outcome fiducial_solutions() {
  Outcome o;
  double min_order = 1e300, det_defect = 0.0;
  for (int k : {1, 2}) {
    for (double t : {1.0, 4.0}) {
      double prev1 = 0.0, prev2 = 0.0;
      for (std::size_t n : {257, 513, 1025}) {
        const auto g = fiducial_grid(1.0, 4.0, k, n, 16);
        const FiducialSolution sol = make_fiducial(t, k, g);
        const HitchinResidual res = hitchin_residual(sol.config, t, {0.05, 2.0});
        if (prev1 > 0.0)
          min_order = std::min({min_order, std::log2(prev1 / res.first_norms.sup), std::log2(prev2 / res.second_norms.sup)});
        prev1 = res.first_norms.sup;
        prev2 = res.second_norms.sup;
        for (std::size_t i = 0; i < g->size(); ++i) {
          const Complex zk = std::pow(g->point(i), k);
          det_defect = std::max(det_defect, std::abs(sol.config.phi[i].determinant() + zk) / std::max(1.0, std::abs(zk)));
        }
      }
    }
  }
  o.require(min_order >= 1.9, "residual order");
  o.require(det_defect <= 1e-13, "determinant");
  o.detail << "min refinement order " << min_order << ", max |det phi + z^k| " << det_defect;
  return o;
}

Outcome exponential_convergence() {
  Outcome o;
  const ConvergenceReport rep = convergence_report({2.0, 4.0, 8.0, 16.0}, 1, {0.5, 1.0});
  const double expected = 8.0 / 3.0 * std::pow(0.5, 1.5);
  const double err_a = std::abs(rep.rate_a / expected - 1.0);
  const double err_phi = std::abs(rep.rate_phi / expected - 1.0);
  o.require(rep.monotone, "monotone");
  o.require(err_a <= 0.1 && err_phi <= 0.1, "rate");
  o.detail << "rates " << rep.rate_a << " (A), " << rep.rate_phi << " (Phi) vs " << expected;
  return o;
}

Outcome gluing_error() {
  Outcome o;
  const double eps = 1.0;
  const std::vector<double> ts{2.0, 4.0, 8.0, 16.0};
  const auto grid = gluing_grid(2.0, 16.0, 1, eps, 1025, 8);
  std::vector<double> sup, l2;
  double worst_outside = 0.0;
  for (double t : ts) {
    const ErrorTerm e = error_term(make_approximate(t, 1, eps, grid));
    worst_outside = std::max(worst_outside, e.outside_sup / e.floor);
    sup.push_back(e.corrected.sup);
    l2.push_back(e.corrected.l2);
  }
  const double c_sup = exponential_rate(ts, sup), c_l2 = exponential_rate(ts, l2);
  o.require(worst_outside <= 10.0, "support");
  o.require(c_sup > 0.0 && c_l2 > 0.0, "decay");
  o.detail << "max outside / floor " << worst_outside << ", fitted c " << c_sup << " (sup), " << c_l2 << " (L2)";
  return o;
}

double bump(double r, double centre, double width) {
  const double s = (r - centre) / width;
  return std::abs(s) < 1.0 ? std::pow(1.0 - s * s, 4) : 0.0;
}

MatrixField random_gamma(const PolarRef& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), centre(0.6, 2.0), width(0.2, 0.5);
  const double c = centre(rng), w = width(rng);
  Mat2 coef[4];
  for (auto& m : coef) {
    m << Complex(u(rng), u(rng)), Complex(u(rng), u(rng)), Complex(u(rng), u(rng)), Complex(u(rng), u(rng));
    m.diagonal().array() -= 0.5 * m.trace();
  }
  return MatrixField::sample(grid, FormDegree::zero, [&](Complex z) {
    Mat2 acc = Mat2::Zero();
    for (int m = 0; m < 4; ++m) {
      const Mat2 term = coef[m] * std::polar(1.0, m * std::arg(z));
      acc += term + term.adjoint();
    }
    return Mat2(bump(std::abs(z), c, w) * acc);
  });
}

Outcome linearized_operator() {
  Outcome o;
  const auto grid = uniform_polar(1e-3, 2.75, 4097, 16);
  const FiducialSolution sol = make_fiducial(1.0, 1, grid);
  std::mt19937_64 rng(0x417C4);
  double worst_gap = 0.0;
  for (int trial = 0; trial < 100; ++trial) worst_gap = std::max(worst_gap, quadratic_form_check(sol.config, 1, random_gamma(grid, rng), 1.0).gap);

  const RadialGrid exterior = RadialGrid::uniform(1.0, 2.0, 257);
  double lowest = 1e300;
  for (int n = -16; n <= 16; ++n)
    lowest = std::min(lowest, assemble_Lt(n, 1.0, limiting_background(1, exterior)).smallest_eigenvalues(1)[0]);

  const auto fgrid = fiducial_grid(1.0, 16.0, 1, 257, 8);
  const std::vector<double> ts{1.0, 2.0, 4.0, 8.0, 16.0};
  const InverseNormReport rep =
      inverse_norm_report(ts, [&](double t) { return radial_background(make_fiducial(t, 1, fgrid)); });
  double lo = 1e300, hi = 0.0;
  for (const auto& row : rep.rows) {
    lo = std::min(lo, row.inverse_norm);
    hi = std::max(hi, row.inverse_norm);
  }
  // H^2 proxy against t^2 between t = 2 and t = 8 (expected factor 16).
  const double growth = (rep.rows[3].h2_bound / rep.rows[1].h2_bound) / 16.0;

  o.require(worst_gap < 1e-4, "quadratic form");
  o.require(lowest > 0.0, "exterior positivity");
  o.require(hi / lo < 4.0 && rep.tail_ok, "L2 bound");
  o.require(growth >= 0.5 && growth <= 2.0, "H2 proxy");
  o.detail << "max gap " << worst_gap << ", exterior min eigenvalue " << lowest << ", L2 bound variation " << hi / lo
           << ", H2 growth / t^2 " << growth;
  return o;
}

Outcome hyperkahler_algebra() {
  Outcome o;
  const GridRef torus = share(TorusGrid(2.0, 3.0, 16, 16));
  std::mt19937_64 rng(0x417C4);
  std::normal_distribution<double> nd;
  auto traceless = [&] {
    Mat2 m;
    m << Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng));
    m.diagonal().array() -= 0.5 * m.trace();
    return m;
  };
  auto random_pair = [&] {
    MatrixField a(torus, FormDegree::zero_one), p(torus, FormDegree::one_zero);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = traceless();
      p[i] = traceless();
    }
    return TangentPair(std::move(a), std::move(p));
  };
  double q_max = 0.0, iso_max = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const TangentPair v = random_pair(), w = random_pair();
    double s = 0.0;
    for (std::size_t i = 0; i < v.alpha().size(); ++i) s = std::max({s, v.alpha()[i].norm(), v.phi_dot()[i].norm()});
    const auto I1 = apply_I(1, v), I2 = apply_I(2, v), I3 = apply_I(3, v);
    double q = std::max({max_difference(apply_I(1, I2), I3), max_difference(apply_I(2, I3), I1),
                         max_difference(apply_I(3, I1), I2)});
    for (int j = 1; j <= 3; ++j) q = std::max(q, max_difference(apply_I(j, apply_I(j, v)), Complex(-1.0) * v));
    q_max = std::max(q_max, q / s);
    const double g = l2_inner(v, w), ref = std::sqrt(l2_inner(v, v) * l2_inner(w, w));
    for (int j = 1; j <= 3; ++j) iso_max = std::max(iso_max, std::abs(l2_inner(apply_I(j, v), apply_I(j, w)) - g) / ref);
  }
  // Residual-free configurations: the fiducial pair (moment maps vanish at second order) and an
  // abelian constant pair on the torus (exactly zero).
  double prev[3] = {0.0, 0.0, 0.0}, min_order = 1e300;
  for (std::size_t n : {257, 513, 1025}) {
    const MomentTriple mu = moment_maps(make_fiducial(1.0, 1, fiducial_grid(1.0, 1.0, 1, n, 8)).config, 1.0);
    const double cur[3] = {norms(mu.mu1, {0.05, 2.0}).sup, norms(mu.mu2, {0.05, 2.0}).sup, norms(mu.mu3, {0.05, 2.0}).sup};
    for (int j = 0; j < 3; ++j) {
      if (prev[j] > 0.0) min_order = std::min(min_order, std::log2(prev[j] / cur[j]));
      prev[j] = cur[j];
    }
  }
  Mat2 a = Mat2::Zero(), phi = Mat2::Zero();
  a(0, 0) = Complex(0.3, -0.7);
  a(1, 1) = -a(0, 0);
  phi(0, 0) = Complex(1.2, 0.5);
  phi(1, 1) = -phi(0, 0);
  const MomentTriple flat = moment_maps(HiggsConfiguration(MatrixField::constant(torus, FormDegree::one_zero, a),
                                                           MatrixField::constant(torus, FormDegree::one_zero, phi)),
                                        2.0);
  const double flat_sup = std::max({norms(flat.mu1).sup, norms(flat.mu2).sup, norms(flat.mu3).sup});
  o.require(q_max < 1e-12, "quaternion relations");
  o.require(iso_max < 1e-12, "isometry");
  o.require(min_order >= 1.9, "fiducial moment maps");
  o.require(flat_sup == 0.0, "abelian moment maps");
  o.detail << "quaternion defect " << q_max << ", isometry defect " << iso_max << ", fiducial moment order "
           << min_order << ", abelian sup " << flat_sup;
  return o;
}

Outcome bessel_oracle() {
  Outcome o;
  const RadialGrid grid = RadialGrid::uniform(0.5, 2.0, 512);
  double worst = 0.0;
  for (int n = 0; n <= 2; ++n) {
    const auto oracle = bessel_neumann_eigenvalues(n, 0.5, 2.0, 4);
    const auto ev = assemble_Lt(n, 0.0, trivial_background(grid)).smallest_eigenvalues(12);
    // Each eigenvalue appears once per fiber component; n = 0 starts with the constants.
    for (std::size_t m = (n == 0 ? 1 : 0); m < 4; ++m)
      for (std::size_t c = 0; c < 3; ++c) worst = std::max(worst, std::abs(ev[3 * m + c] - oracle[m]) / oracle[m]);
  }
  o.require(worst <= 5e-3, "relative error");
  o.detail << "max relative error " << worst;
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"ODE correctness", ode_correctness},
      {"Painleve reduction", painleve_reduction},
      {"Limiting metric", limiting_metric},
      {"Fiducial solutions solve Hitchin's equations", fiducial_solutions},
      {"Exponential convergence to the limit", exponential_convergence},
      {"Gluing error", gluing_error},
      {"Linearized operator", linearized_operator},
      {"Hyperkahler algebra", hyperkahler_algebra},
      {"t=0 Bessel oracle", bessel_oracle},
  };
  int failures = 0, index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %d. %s: %s (%.1f s)\n", o.passed ? "PASS" : "FAIL", index, name, o.detail.str().c_str(), secs);
    std::fflush(stdout);
    failures += o.passed ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
