#include "hitchin/gluing.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <boost/math/special_functions/bessel_prime.hpp>
#include <boost/math/tools/roots.hpp>
#include <lapacke.h>

namespace hitchin {

// --- cutoff ------------------------------------------------------------------

double CutoffFunction::value(double epsilon, double r) {
  const double s = std::clamp((epsilon - r) / (0.5 * epsilon), 0.0, 1.0);
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double CutoffFunction::derivative(double epsilon, double r) {
  const double s = (epsilon - r) / (0.5 * epsilon);
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return -30.0 * s * s * (1.0 - s) * (1.0 - s) * 2.0 / epsilon;
}

double CutoffFunction::second_derivative(double epsilon, double r) {
  const double s = (epsilon - r) / (0.5 * epsilon);
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) * 4.0 / (epsilon * epsilon);
}

CutoffFunction make_cutoff(double epsilon, const RadialGrid& grid) {
  if (!(epsilon > 0.0)) throw ContractError("make_cutoff: epsilon must be positive");
  if (grid.r_min() > 0.5 * epsilon || grid.r_max() < epsilon)
    throw ContractError("make_cutoff: [eps/2, eps] is not inside the grid");
  const auto nodes = grid.nodes();
  const auto inside = std::count_if(nodes.begin(), nodes.end(),
                                    [&](double r) { return r >= 0.5 * epsilon && r <= epsilon; });
  if (inside < 8) {
    std::ostringstream os;
    os << "make_cutoff: grid too coarse, " << inside << " nodes in [eps/2, eps] (need 8)";
    throw ContractError(os.str());
  }
  CutoffFunction c{epsilon, grid, {}, {}};
  c.chi.reserve(grid.size());
  c.chi_prime.reserve(grid.size());
  for (double r : nodes) {
    c.chi.push_back(CutoffFunction::value(epsilon, r));
    c.chi_prime.push_back(CutoffFunction::derivative(epsilon, r));
  }
  return c;
}

// --- approximate pair ----------------------------------------------------------

ApproximatePair make_approximate(const FiducialSolution& fiducial, double epsilon) {
  if (fiducial.is_limit()) throw ContractError("make_approximate: needs a finite-t fiducial solution");
  const auto grid = std::get<std::shared_ptr<const PolarGrid>>(fiducial.config.grid());
  CutoffFunction cutoff = make_cutoff(epsilon, grid->radial());
  const std::size_t n = grid->n_r();
  std::vector<double> h(n), hp(n);
  std::vector<PatchRegion> regions(n);
  for (std::size_t i = 0; i < n; ++i) {
    h[i] = cutoff.chi[i] * fiducial.h[i];
    hp[i] = cutoff.chi_prime[i] * fiducial.h[i] + cutoff.chi[i] * fiducial.h_prime[i];
    const double r = grid->radial()[i];
    regions[i] = r <= 0.5 * epsilon ? PatchRegion::fiducial : r >= epsilon ? PatchRegion::limiting : PatchRegion::blended;
  }
  const ConnectionConstant constant = std::abs(fiducial.f.back() - 0.125 * fiducial.k) <
                                              std::abs(fiducial.f.back() - 0.125)
                                          ? ConnectionConstant::k_over_8
                                          : ConnectionConstant::one_eighth;
  FiducialSolution pair = radial_pair(fiducial.t, fiducial.k, grid, std::move(h), std::move(hp), constant);
  return ApproximatePair{fiducial.t, epsilon, fiducial.k, std::move(cutoff), fiducial, std::move(pair),
                         std::move(regions)};
}

ApproximatePair make_approximate(double t, int k, double epsilon, const std::shared_ptr<const PolarGrid>& grid,
                                 const FiducialOptions& options) {
  return make_approximate(make_fiducial(t, k, grid, options), epsilon);
}

std::shared_ptr<const PolarGrid> gluing_grid(double t_min, double t_max, int k, double epsilon, std::size_t n_r,
                                             std::size_t n_theta) {
  if (!(epsilon > 0.0)) throw ContractError("gluing_grid: epsilon must be positive");
  return fiducial_grid(t_min, t_max, k, n_r, n_theta, 12.0, 2.0 * epsilon);
}

namespace {

double ring_sup(const MatrixField& field, const std::vector<std::size_t>& rings) {
  const PolarGrid& g = as_polar(field.grid());
  double sup = 0.0;
  for (std::size_t i : rings)
    for (std::size_t j = 0; j < g.n_theta(); ++j) sup = std::max(sup, field[g.index(i, j)].norm());
  return field.degree() == FormDegree::two ? 2.0 * sup : sup;
}

}  // namespace

ErrorTerm error_term(const ApproximatePair& ap) {
  const RadialInterval annulus{0.5 * ap.epsilon, ap.epsilon};
  HitchinResidual res = hitchin_residual(ap.config(), ap.t, annulus);
  const PolarGrid& g = ap.grid();
  const auto nodes = g.radial().nodes();
  const std::size_t m = nodes.size();
  const std::size_t lo = std::lower_bound(nodes.begin(), nodes.end(), annulus.lo) - nodes.begin();
  const std::size_t hi = std::upper_bound(nodes.begin(), nodes.end(), annulus.hi) - nodes.begin() - 1;
  std::vector<std::size_t> inner, outer;
  for (std::size_t i = 3; i + 3 < m; ++i) {
    if (i + 3 <= lo) inner.push_back(i);
    if (i >= hi + 3) outer.push_back(i);
  }
  const auto grid = std::get<std::shared_ptr<const PolarGrid>>(ap.config().grid());
  const MatrixField fid = hitchin_residual(ap.fiducial.config, ap.t).first;
  const MatrixField lim = hitchin_residual(make_limiting(ap.k, grid).config, ap.t).first;
  ErrorTerm out{std::move(res.first), res.first_norms, 0.0, 0.0, {}, {}};
  out.outside_sup = std::max(ring_sup(out.field, inner), ring_sup(out.field, outer));
  out.floor = std::max(ring_sup(fid, inner), ring_sup(lim, outer));
  out.corrected = norms(out.field - lim, annulus);
  const double t2 = ap.t * ap.t;
  MatrixField reduced(out.field.grid(), FormDegree::two);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = nodes[i], h = ap.fiducial.h[i], hp = ap.fiducial.h_prime[i];
    const double chi = ap.cutoff.chi[i], dchi = ap.cutoff.chi_prime[i];
    const double ddchi = CutoffFunction::second_derivative(ap.epsilon, r);
    const double e = -0.25 * (ddchi * h + 2.0 * dchi * hp + dchi * h / r +
                              8.0 * t2 * std::pow(r, ap.k) * (chi * std::sinh(2.0 * h) - std::sinh(2.0 * chi * h)));
    for (std::size_t j = 0; j < g.n_theta(); ++j) reduced[g.index(i, j)] = e * pauli_z();
  }
  out.reduced = norms(reduced, annulus);
  return out;
}

double exponential_rate(const std::vector<double>& t, const std::vector<double>& values) {
  if (t.size() != values.size() || t.size() < 2) throw ContractError("exponential_rate: need two or more points");
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(values[i] > 0.0)) throw ContractError("exponential_rate: values must be positive");
    mt += t[i];
    my += std::log(values[i]);
  }
  mt /= t.size();
  my /= t.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (t[i] - mt) * (std::log(values[i]) - my);
    sxx += (t[i] - mt) * (t[i] - mt);
  }
  return -sxy / sxx;
}

// --- M_phi ---------------------------------------------------------------------

namespace {

// [alpha dz ^ beta dz-bar] + [beta dz-bar ^ alpha dz] on dz^dz-bar.
Mat2 wedge_bracket(const Mat2& alpha_10, const Mat2& beta_01) { return commutator(alpha_10, beta_01); }

}  // namespace

Mat2 m_phi(const Mat2& phi, const Mat2& gamma) {
  const double scale = std::max(1.0, gamma.norm());
  if ((gamma - gamma.adjoint()).norm() > 1e-12 * scale) throw ContractError("m_phi: gamma is not hermitian");
  if (std::abs(gamma.trace()) > 1e-12 * scale) throw ContractError("m_phi: gamma is not traceless");
  const Mat2 phi_star = phi.adjoint();
  return wedge_bracket(commutator(phi, gamma), phi_star) - wedge_bracket(phi, commutator(phi_star, gamma));
}

Mat2 phi_wedge_bracket_star(const Mat2& phi, const Mat2& gamma) {
  return wedge_bracket(phi, commutator(phi, gamma).adjoint());
}

Mat2 phi_wedge_bracket_phistar(const Mat2& phi, const Mat2& gamma) {
  return wedge_bracket(phi, commutator(phi.adjoint(), gamma));
}

// --- radial backgrounds --------------------------------------------------------

RadialBackground trivial_background(const RadialGrid& grid) {
  return {grid, 0, std::vector<double>(grid.size(), 0.0), std::vector<double>(grid.size(), 0.0), false};
}

RadialBackground limiting_background(int k, const RadialGrid& grid) {
  if (k < 1) throw ContractError("limiting_background: k must be a positive integer");
  return {grid, k, std::vector<double>(grid.size(), 0.0), std::vector<double>(grid.size(), k / 8.0), true};
}

RadialBackground radial_background(const HiggsConfiguration& config, int k) {
  if (!is_polar(config.grid())) throw ContractError("radial_background: needs a polar grid");
  if (k < 0) throw ContractError("radial_background: k must be non-negative");
  const PolarGrid& g = as_polar(config.grid());
  RadialBackground bg{g.radial(), k, std::vector<double>(g.n_r()), std::vector<double>(g.n_r()), true};
  auto fail = [&](std::size_t idx, const char* what) {
    std::ostringstream os;
    os << "radial_background: non-equivariant background (" << what << ") at node " << idx << " (z = "
       << g.point(idx) << ")";
    throw ContractError(os.str());
  };
  for (std::size_t i = 0; i < g.n_r(); ++i) {
    const double r = g.radial()[i];
    const Complex z0 = g.point(g.index(i, 0));
    const double f = (config.a[g.index(i, 0)](0, 0) * z0).real();
    const double p = config.phi[g.index(i, 0)](0, 1).real();
    if (!(p > 0.0)) fail(g.index(i, 0), "Higgs field entry");
    bg.f[i] = f;
    bg.h[i] = std::log(p) - 0.5 * k * std::log(r);
    for (std::size_t j = 0; j < g.n_theta(); ++j) {
      const std::size_t idx = g.index(i, j);
      const Complex z = g.point(idx);
      if ((config.a[idx] * z - f * pauli_z()).norm() > 1e-9 * std::max(1.0, std::abs(f))) fail(idx, "connection");
      Mat2 expect = Mat2::Zero();
      expect(0, 1) = p;
      expect(1, 0) = std::pow(z, k) / p;
      if ((config.phi[idx] - expect).norm() > 1e-9 * expect.norm()) fail(idx, "Higgs field");
      if ((config.background[idx] - Mat2::Identity()).norm() > 1e-12) fail(idx, "background metric");
    }
  }
  return bg;
}

RadialBackground radial_background(const FiducialSolution& sol) { return radial_background(sol.config, sol.k); }
RadialBackground radial_background(const ApproximatePair& ap) { return radial_background(ap.config(), ap.k); }

// --- mode operator -------------------------------------------------------------

namespace {

struct FiniteVolumes {
  std::vector<double> face;    // r_{i+1/2} / (r_{i+1} - r_i), i = 0 .. m-2
  std::vector<double> volume;  // integral of r dr over the control volume of node i
};

FiniteVolumes finite_volumes(const RadialGrid& grid) {
  const std::size_t m = grid.size();
  FiniteVolumes fv{std::vector<double>(m - 1), std::vector<double>(m)};
  for (std::size_t i = 0; i + 1 < m; ++i) fv.face[i] = 0.5 * (grid[i] + grid[i + 1]) / (grid[i + 1] - grid[i]);
  for (std::size_t i = 0; i < m; ++i) {
    const double lo = i == 0 ? grid[0] : 0.5 * (grid[i - 1] + grid[i]);
    const double hi = i + 1 == m ? grid[m - 1] : 0.5 * (grid[i] + grid[i + 1]);
    fv.volume[i] = 0.5 * (hi * hi - lo * lo);
  }
  return fv;
}

}  // namespace

ModeOperator::ModeOperator(int n, double t, const RadialBackground& bg, BoundaryCondition bc)
    : n_(n), t_(t), bc_(bc) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ContractError("assemble_Lt: t must be finite and non-negative");
  const RadialGrid& grid = bg.grid;
  const std::size_t m = grid.size();
  if (m < 4) throw ContractError("assemble_Lt: radial grid too small");
  if (bg.h.size() != m || bg.f.size() != m) throw ContractError("assemble_Lt: background profile length mismatch");
  if (!(grid.r_min() > 0.0)) throw ContractError("assemble_Lt: grid must exclude r = 0");
  const FiniteVolumes fv = finite_volumes(grid);
  const std::size_t first = bc == BoundaryCondition::neumann ? 0 : 1;
  const std::size_t last = bc == BoundaryCondition::neumann ? m - 1 : m - 2;
  for (std::size_t i = first; i <= last; ++i) nodes_.push_back(i);
  const std::size_t M = nodes_.size();
  band_.assign(static_cast<std::size_t>(kBand + 1) * 3 * M, 0.0);
  potential_.resize(M);
  const int k = bg.higgs ? bg.k : 0;
  for (std::size_t p = 0; p < M; ++p) {
    const std::size_t i = nodes_[p];
    const double r = grid[i];
    const double vol = fv.volume[i];
    weights_.push_back(vol);
    const double kinetic = (i > 0 ? fv.face[i - 1] : 0.0) + (i + 1 < m ? fv.face[i] : 0.0);
    const double mu[3] = {static_cast<double>(n), n + 4.0 * bg.f[i], n + k - 4.0 * bg.f[i]};
    std::array<double, 4> pot{0.0, 0.0, 0.0, 0.0};
    if (bg.higgs) {
      const double q = t * t * std::pow(r, k);
      const double ch = std::cosh(2.0 * bg.h[i]);
      pot = {16.0 * q * ch, 8.0 * q * ch, 8.0 * q * ch, -8.0 * q};
    }
    potential_[p] = pot;
    for (std::size_t c = 0; c < 3; ++c) {
      s(3 * p + c, 3 * p + c) = kinetic + vol * (mu[c] * mu[c] / (r * r) + pot[c]);
      if (p + 1 < M) s(3 * (p + 1) + c, 3 * p + c) = -fv.face[i];
    }
    s(3 * p + 2, 3 * p + 1) = vol * pot[3];
  }
}

double& ModeOperator::s(std::size_t i, std::size_t j) { return band_[(i - j) + j * (kBand + 1)]; }
double ModeOperator::s(std::size_t i, std::size_t j) const { return band_[(i - j) + j * (kBand + 1)]; }

Eigen::VectorXd ModeOperator::apply(const Eigen::VectorXd& u) const {
  const std::size_t N = dimension();
  if (static_cast<std::size_t>(u.size()) != N) throw ContractError("ModeOperator::apply: dimension mismatch");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(N);
  for (std::size_t j = 0; j < N; ++j) {
    y[j] += s(j, j) * u[j];
    for (std::size_t i = j + 1; i < std::min(N, j + kBand + 1); ++i) {
      const double v = s(i, j);
      y[i] += v * u[j];
      y[j] += v * u[i];
    }
  }
  for (std::size_t j = 0; j < N; ++j) y[j] /= weights_[j / 3];
  return y;
}

Eigen::SparseMatrix<double> ModeOperator::symmetric_form() const {
  const std::size_t N = dimension();
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t i = j; i < std::min(N, j + kBand + 1); ++i) {
      const double v = s(i, j);
      if (v == 0.0) continue;
      trip.emplace_back(i, j, v);
      if (i != j) trip.emplace_back(j, i, v);
    }
  Eigen::SparseMatrix<double> S(N, N);
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

Eigen::MatrixXd ModeOperator::dense() const {
  Eigen::MatrixXd L = Eigen::MatrixXd(symmetric_form());
  for (std::size_t i = 0; i < dimension(); ++i) L.row(i) /= weights_[i / 3];
  return L;
}

std::vector<double> ModeOperator::scaled_band() const {
  std::vector<double> ab = band_;
  const std::size_t N = dimension();
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t i = j; i < std::min(N, j + kBand + 1); ++i)
      ab[(i - j) + j * (kBand + 1)] /= std::sqrt(weights_[i / 3] * weights_[j / 3]);
  return ab;
}

namespace {

std::vector<double> band_eigenvalues(std::vector<double> ab, int n, int kd, int il, int iu) {
  std::vector<double> w(n);
  std::vector<lapack_int> ifail(n);
  double q = 0.0, z = 0.0;
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsbevx(LAPACK_COL_MAJOR, 'N', 'I', 'L', n, kd, ab.data(), kd + 1, &q, 1, 0.0, 0.0,
                                         il, iu, 2.0 * LAPACKE_dlamch('S'), &found, w.data(), &z, 1, ifail.data());
  if (info != 0) throw SolverError("dsbevx failed with info " + std::to_string(info), {});
  w.resize(found);
  return w;
}

}  // namespace

std::vector<double> ModeOperator::smallest_eigenvalues(std::size_t count) const {
  const int N = static_cast<int>(dimension());
  count = std::min<std::size_t>(count, N);
  if (count == 0) return {};
  return band_eigenvalues(scaled_band(), N, kBand, 1, static_cast<int>(count));
}

double ModeOperator::largest_eigenvalue() const {
  const int N = static_cast<int>(dimension());
  return band_eigenvalues(scaled_band(), N, kBand, N, N).front();
}

double ModeOperator::self_adjointness_defect(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const std::size_t N = dimension();
  auto inner = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) acc += weights_[i / 3] * a[i] * b[i];
    return acc;
  };
  auto norm = [&](const Eigen::VectorXd& a) { return std::sqrt(inner(a, a)); };
  double worst = 0.0;
  for (int trial = 0; trial < 4; ++trial) {
    Eigen::VectorXd u(N), v(N);
    for (std::size_t i = 0; i < N; ++i) {
      u[i] = nd(rng);
      v[i] = nd(rng);
    }
    const Eigen::VectorXd Lu = apply(u), Lv = apply(v);
    worst = std::max(worst, std::abs(inner(Lu, v) - inner(u, Lv)) / (norm(Lu) * norm(v)));
  }
  return worst;
}

double ModeOperator::singular_tolerance() const {
  double diag = 0.0;
  for (std::size_t j = 0; j < dimension(); ++j) diag = std::max(diag, s(j, j) / weights_[j / 3]);
  return 1e-13 * diag;
}

double ModeOperator::potential_sup() const {
  double sup = 0.0;
  for (const auto& p : potential_) sup = std::max({sup, std::abs(p[0]), std::abs(p[1]) + std::abs(p[3])});
  return sup;
}

double ModeOperator::laplacian_inverse_norm(std::size_t iterations) const {
  // Symmetric coordinates y = W^{1/2} u: L -> W^{-1/2} S W^{-1/2}, V unchanged.
  const lapack_int N = static_cast<lapack_int>(dimension());
  std::vector<double> chol = scaled_band();
  if (LAPACKE_dpbtrf(LAPACK_COL_MAJOR, 'L', N, kBand, chol.data(), kBand + 1) != 0)
    throw SolverError("laplacian_inverse_norm: mode operator is not positive definite", {});
  auto solve = [&](Eigen::VectorXd x) {
    LAPACKE_dpbtrs(LAPACK_COL_MAJOR, 'L', N, kBand, 1, chol.data(), kBand + 1, x.data(), N);
    return x;
  };
  auto potential = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(N);
    for (lapack_int p = 0; p < N / 3; ++p) {
      const auto& q = potential_[p];
      y[3 * p] = q[0] * x[3 * p];
      y[3 * p + 1] = q[1] * x[3 * p + 1] + q[3] * x[3 * p + 2];
      y[3 * p + 2] = q[3] * x[3 * p + 1] + q[2] * x[3 * p + 2];
    }
    return y;
  };
  // B = I - V L^{-1};  power iteration on B^T B.
  Eigen::VectorXd x = Eigen::VectorXd::Ones(N).normalized();
  double sigma2 = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    const Eigen::VectorXd y = x - potential(solve(x));
    const Eigen::VectorXd z = y - solve(potential(y));
    const double next = z.norm();
    x = z / next;
    if (std::abs(next - sigma2) <= 1e-12 * next) {
      sigma2 = next;
      break;
    }
    sigma2 = next;
  }
  return std::sqrt(sigma2);
}

ModeOperator assemble_Lt(int n, double t, const RadialBackground& background, BoundaryCondition bc) {
  return ModeOperator(n, t, background, bc);
}

ModeOperator assemble_Lt(int n, double t, const FiducialSolution& background, BoundaryCondition bc) {
  return ModeOperator(n, t, radial_background(background), bc);
}

ModeOperator assemble_Lt(int n, double t, const ApproximatePair& background, BoundaryCondition bc) {
  return ModeOperator(n, t, radial_background(background), bc);
}

// --- full operator on the polar grid -----------------------------------------------

MatrixField apply_Lt(const HiggsConfiguration& config, int k, double t, const MatrixField& gamma) {
  require_same_grid(config.phi, gamma, "apply_Lt");
  if (gamma.degree() != FormDegree::zero) throw ContractError("apply_Lt: gamma must be a function");
  const RadialBackground bg = radial_background(config, k);
  const PolarGrid& g = as_polar(gamma.grid());
  const std::size_t m = g.n_r(), nt = g.n_theta();
  const FiniteVolumes fv = finite_volumes(g.radial());
  const FourierDerivative& D = g.angular();
  const MatrixField phi_star = adjoint_wrt(config.phi, config.background);
  const Mat2 s3 = pauli_z();
  MatrixField out(gamma.grid(), FormDegree::zero);
  std::vector<Mat2> dth(nt);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = g.radial()[i];
    const Complex twoif = 2.0 * kI * bg.f[i];
    auto covariant_theta = [&](auto&& value, std::size_t j) {
      Mat2 acc = twoif * commutator(s3, value(j));
      for (std::size_t l = 0; l < nt; ++l) acc += D.first(j, l) * value(l);
      return acc;
    };
    for (std::size_t j = 0; j < nt; ++j)
      dth[j] = covariant_theta([&](std::size_t l) -> const Mat2& { return gamma[g.index(i, l)]; }, j);
    for (std::size_t j = 0; j < nt; ++j) {
      const std::size_t idx = g.index(i, j);
      Mat2 flux = Mat2::Zero();
      if (i > 0) flux += fv.face[i - 1] * (gamma[idx] - gamma[g.index(i - 1, j)]);
      if (i + 1 < m) flux += fv.face[i] * (gamma[idx] - gamma[g.index(i + 1, j)]);
      Mat2 val = flux / fv.volume[i];
      val -= covariant_theta([&](std::size_t l) -> const Mat2& { return dth[l]; }, j) / (r * r);
      const Mat2& p = config.phi[idx];
      const Mat2& ps = phi_star[idx];
      val += 2.0 * t * t * (commutator(ps, commutator(p, gamma[idx])) + commutator(p, commutator(ps, gamma[idx])));
      out[idx] = val;
    }
  }
  return out;
}

namespace {

struct CovariantDerivatives {
  std::vector<Mat2> dz;
  std::vector<Mat2> dzbar;
};

CovariantDerivatives covariant_derivatives(const HiggsConfiguration& config, const std::vector<Mat2>& values) {
  const MatrixField b = config.a_zero_one();
  const MatrixField field(config.grid(), FormDegree::zero, values);
  CovariantDerivatives d{partial_z(field), partial_zbar(field)};
  for (std::size_t i = 0; i < values.size(); ++i) {
    d.dz[i] += commutator(config.a[i], values[i]);
    d.dzbar[i] += commutator(b[i], values[i]);
  }
  return d;
}

}  // namespace

MatrixField covariant_laplacian(const HiggsConfiguration& config, const MatrixField& gamma) {
  require_same_grid(config.phi, gamma, "covariant_laplacian");
  const CovariantDerivatives first = covariant_derivatives(config, gamma.values());
  const CovariantDerivatives zbar_z = covariant_derivatives(config, first.dz);
  const CovariantDerivatives z_zbar = covariant_derivatives(config, first.dzbar);
  MatrixField out(gamma.grid(), FormDegree::zero);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -2.0 * (zbar_z.dzbar[i] + z_zbar.dz[i]);
  return out;
}

QuadraticFormCheck quadratic_form_check(const HiggsConfiguration& config, int k, const MatrixField& gamma, double t) {
  require_same_grid(config.phi, gamma, "quadratic_form_check");
  const PolarGrid& g = as_polar(gamma.grid());
  double scale = 0.0;
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    const Mat2& v = gamma[i];
    scale = std::max(scale, v.norm());
  }
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    const Mat2& v = gamma[i];
    if ((v - v.adjoint()).norm() > 1e-12 * std::max(1.0, scale))
      throw ContractError("quadratic_form_check: gamma is not hermitian");
    if (std::abs(v.trace()) > 1e-12 * std::max(1.0, scale))
      throw ContractError("quadratic_form_check: gamma is not traceless");
  }
  const std::size_t m = g.n_r();
  for (std::size_t i = 0; i < m; ++i) {
    if (i >= 3 && i + 3 < m) continue;
    for (std::size_t j = 0; j < g.n_theta(); ++j)
      if (gamma[g.index(i, j)].norm() > 1e-14 * scale)
        throw ContractError("quadratic_form_check: support of gamma touches the boundary");
  }
  QuadraticFormCheck q;
  if (scale == 0.0) return q;
  const MatrixField Lg = apply_Lt(config, k, t, gamma);
  const FiniteVolumes fv = finite_volumes(g.radial());
  const double dtheta = 2.0 * kPi / static_cast<double>(g.n_theta());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < g.n_theta(); ++j) {
      const std::size_t idx = g.index(i, j);
      q.lhs += fv.volume[i] * dtheta * (Lg[idx] * gamma[idx].adjoint()).trace().real();
    }
  const CovariantDerivatives d = covariant_derivatives(config, gamma.values());
  const std::vector<double> w = area_weights(gamma.grid());
  for (std::size_t idx = 0; idx < gamma.size(); ++idx) {
    q.gradient += w[idx] * 2.0 * (d.dz[idx].squaredNorm() + d.dzbar[idx].squaredNorm());
    q.commutator += w[idx] * commutator(config.phi[idx], gamma[idx]).squaredNorm();
  }
  q.rhs = q.gradient + 4.0 * t * t * q.commutator;
  const double denom = std::max(std::abs(q.lhs), std::abs(q.rhs));
  q.gap = denom > 0.0 ? std::abs(q.lhs - q.rhs) / denom : 0.0;
  return q;
}

double commutator_coefficient(const HiggsConfiguration& config, int k, const MatrixField& gamma, double t) {
  const QuadraticFormCheck q = quadratic_form_check(config, k, gamma, t);
  if (!(q.commutator > 0.0)) throw ContractError("commutator_coefficient: gamma commutes with phi");
  return (q.lhs - q.gradient) / q.commutator;
}

// --- Bessel oracle ---------------------------------------------------------------

std::vector<double> bessel_neumann_eigenvalues(int n, double a, double b, std::size_t count) {
  if (!(a > 0.0) || !(b > a)) throw ContractError("bessel_neumann_eigenvalues: need 0 < a < b");
  n = std::abs(n);
  using boost::math::cyl_bessel_j_prime;
  using boost::math::cyl_neumann_prime;
  auto cross = [&](double kappa) {
    return cyl_bessel_j_prime(n, kappa * a) * cyl_neumann_prime(n, kappa * b) -
           cyl_bessel_j_prime(n, kappa * b) * cyl_neumann_prime(n, kappa * a);
  };
  std::vector<double> out;
  if (n == 0) out.push_back(0.0);
  const double step = kPi / (b - a) / 64.0;
  double lo = 1e-3 / b, flo = cross(lo);
  while (out.size() < count) {
    const double hi = lo + step;
    const double fhi = cross(hi);
    if (std::signbit(flo) != std::signbit(fhi)) {
      std::uintmax_t iters = 200;
      const auto root = boost::math::tools::toms748_solve(cross, lo, hi, flo, fhi,
                                                          boost::math::tools::eps_tolerance<double>(50), iters);
      const double kappa = 0.5 * (root.first + root.second);
      out.push_back(kappa * kappa);
    }
    lo = hi;
    flo = fhi;
  }
  return out;
}

// --- inverse norms and contraction ---------------------------------------------------

InverseNormReport inverse_norm_report(const std::vector<double>& t_list,
                                      const std::function<RadialBackground(double)>& background,
                                      const InverseNormOptions& options) {
  if (t_list.empty()) throw ContractError("inverse_norm_report: empty t list");
  if (options.n_max < 0) throw ContractError("inverse_norm_report: n_max must be non-negative");
  InverseNormReport report;
  report.n_max = options.n_max;
  report.tail_bound = std::numeric_limits<double>::infinity();
  for (double t : t_list) {
    const RadialBackground bg = background(t);
    const int k = bg.higgs ? bg.k : 0;
    const double gap = std::max(0, options.n_max + 1 - k);
    report.tail_bound = std::min(report.tail_bound, gap * gap / (bg.grid.r_max() * bg.grid.r_max()));
    InverseNormRow row{t, std::numeric_limits<double>::infinity(), 0, 0.0, 0.0, 0.0};
    double pot = 0.0, h2 = 0.0;
    for (int n = -options.n_max; n <= options.n_max; ++n) {
      const ModeOperator op(n, t, bg, options.bc);
      double lambda = op.smallest_eigenvalues(1).front();
      if (lambda <= op.singular_tolerance()) lambda = 0.0;
      if (lambda < row.min_singular) {
        row.min_singular = lambda;
        row.argmin_mode = n;
      }
      pot = std::max(pot, op.potential_sup());
      if (options.measure_h2 && lambda > 0.0) h2 = std::max(h2, op.laplacian_inverse_norm());
    }
    row.inverse_norm = row.min_singular > 0.0 ? 1.0 / row.min_singular : std::numeric_limits<double>::infinity();
    row.h2_bound = 1.0 + pot * row.inverse_norm;
    row.h2_measured = h2;
    report.rows.push_back(row);
  }
  for (const auto& row : report.rows) report.tail_ok = report.tail_ok && report.tail_bound > row.min_singular;
  return report;
}

ContractionProbe contraction_probe(double t, double epsilon, const ContractionOptions& options) {
  const auto grid = options.grid ? options.grid : gluing_grid(t, t, options.k, epsilon, options.n_r, options.n_theta);
  const ApproximatePair ap = make_approximate(t, options.k, epsilon, grid);
  ContractionProbe probe{t, epsilon, 0.0, 0.0, 0.0, 0.0, false};
  if (options.error_override) {
    probe.error_norm = *options.error_override;
  } else {
    const ErrorTerm err = error_term(ap);
    probe.error_norm = err.corrected.l2;
    probe.error_sup = err.corrected.sup;
  }
  const RadialBackground bg = radial_background(ap);
  InverseNormOptions inv;
  inv.n_max = options.n_max;
  inv.measure_h2 = false;
  probe.inverse_norm =
      inverse_norm_report({t}, [&](double) { return bg; }, inv).rows.front().inverse_norm;
  probe.product = probe.inverse_norm * probe.error_norm;
  probe.feasible = probe.product < options.threshold;
  return probe;
}

}  // namespace hitchin
