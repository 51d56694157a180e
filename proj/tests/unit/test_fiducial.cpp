#include <cmath>

#include "doctest.h"
#include "hitchin/fiducial.hpp"

using namespace hitchin;

namespace {

double refinement_order(double coarse, double fine) { return std::log2(coarse / fine); }

}  // namespace

TEST_CASE("make_fiducial: Higgs field, determinant, metric") {
  for (int k : {1, 2}) {
    const double t = 2.0;
    const auto g = fiducial_grid(t, t, k, 513, 16);
    const auto sol = make_fiducial(t, k, g);
    CHECK(sol.profile.has_value());
    CHECK_FALSE(sol.is_limit());
    for (std::size_t i = 0; i < g->n_r(); i += 7) {
      const double r = g->radial()[i];
      for (std::size_t j = 0; j < g->n_theta(); j += 5) {
        const std::size_t idx = g->index(i, j);
        const Complex z = g->point(idx);
        const Mat2& p = sol.config.phi[idx];
        CHECK(std::abs(p(0, 1) - std::pow(r, 0.5 * k) * std::exp(sol.h[i])) < 1e-13 * std::abs(p(0, 1)));
        CHECK(std::abs(p(1, 0) - std::pow(z, k) * std::pow(r, -0.5 * k) * std::exp(-sol.h[i])) <
              1e-13 * (1.0 + std::abs(p(1, 0))));
        CHECK(std::abs(p.determinant() + std::pow(z, k)) < 1e-14 * (1.0 + std::pow(r, k)));
        CHECK(std::abs(sol.metric[idx].determinant() - 1.0) < 1e-13);
      }
    }
    // f in (0, k/8], tending to 0 at the origin and to k/8 far out.
    for (double f : sol.f) {
      CHECK(f > 0.0);
      CHECK(f <= k / 8.0 + 1e-15);
    }
    CHECK(sol.f.front() < 1e-3);
    CHECK(std::abs(sol.f.back() - k / 8.0) < 1e-3);
  }
}

TEST_CASE("fiducial metric approaches the limiting metric far out") {
  const double t = 1.0;
  const int k = 1;
  const auto g = fiducial_grid(t, t, k, 1025, 8, 20.0);
  const auto sol = make_fiducial(t, k, g);
  const auto lim = make_limiting(k, g);
  for (std::size_t i = 0; i < g->n_r(); ++i) {
    if (rho_of(g->radial()[i], t, k) < 12.0) continue;
    const std::size_t idx = g->index(i, 0);
    CHECK((sol.metric[idx] * lim.metric[idx].inverse() - Mat2::Identity()).norm() < 1e-4);
  }
}

TEST_CASE("fiducial pair solves both equations at second order") {
  for (int k : {1, 2}) {
    for (double t : {1.0, 4.0}) {
      double prev1 = 0.0, prev2 = 0.0;
      for (std::size_t n : {257, 513, 1025}) {
        const auto g = fiducial_grid(1.0, 4.0, k, n, 16);
        const auto sol = make_fiducial(t, k, g);
        const auto res = hitchin_residual(sol.config, t, {0.05, 2.0});
        if (prev1 > 0.0) {
          CHECK(refinement_order(prev1, res.first_norms.sup) >= 1.9);
          CHECK(refinement_order(prev2, res.second_norms.sup) >= 1.9);
        }
        prev1 = res.first_norms.sup;
        prev2 = res.second_norms.sup;
      }
      CHECK(prev1 < 1e-3);
    }
  }
}

TEST_CASE("hermitian-metric route agrees with the gauge route") {
  const int k = 1;
  const double t = 2.0;
  double prev = 0.0;
  for (std::size_t n : {257, 513, 1025}) {
    const auto g = fiducial_grid(t, t, k, n, 16);
    const auto sol = make_fiducial(t, k, g);
    const MatrixField herm = hermitian_residual(sol.metric, standard_pair(k, g).phi, t);
    const GaugeTransformField gt = g_fiducial(sol);
    const HiggsConfiguration moved = gauge_apply(gt, standard_pair(k, g));
    CHECK(max_difference(moved.phi, sol.config.phi) < 1e-13);
    CHECK(max_difference(moved.a, sol.config.a, {0.01, 2.0}) < 1e-12);
    const auto res = hitchin_residual(moved, t);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i : nodes_in(*g, {0.05, 1.5})) {
      const Mat2& gi = gt.g()[i];
      worst = std::max(worst, (res.first[i] - gi.inverse() * herm[i] * gi).norm());
      scale = std::max(scale, herm[i].norm());
    }
    CHECK(scale < 1e-2);
    if (prev > 0.0) CHECK(worst < prev);
    prev = worst;
  }
}

TEST_CASE("literal 1/8 constant breaks holomorphicity for k = 2") {
  const auto g = fiducial_grid(2.0, 2.0, 2, 513, 16);
  FiducialOptions lit;
  lit.constant = ConnectionConstant::one_eighth;
  const auto bad = make_fiducial(2.0, 2, g, lit);
  const auto good = make_fiducial(2.0, 2, g);
  CHECK(hitchin_residual(bad.config, 2.0, {0.1, 1.0}).second_norms.sup > 0.1);
  CHECK(hitchin_residual(good.config, 2.0, {0.1, 1.0}).second_norms.sup < 1e-3);
  // For k = 1 both constants coincide.
  const auto g1 = fiducial_grid(2.0, 2.0, 1, 257, 8);
  FiducialOptions lit1 = lit;
  CHECK(max_difference(make_fiducial(2.0, 1, g1, lit1).config.a, make_fiducial(2.0, 1, g1).config.a) == 0.0);
}

TEST_CASE("f_t tends to k/8 and h_t to 0 as t grows") {
  const int k = 1;
  const auto g = fiducial_grid(2.0, 16.0, k, 1025, 8, 12.0, 1.0);
  const std::size_t i1 = [&] {
    std::size_t best = 0;
    for (std::size_t i = 0; i < g->n_r(); ++i)
      if (std::abs(g->radial()[i] - 1.0) < std::abs(g->radial()[best] - 1.0)) best = i;
    return best;
  }();
  double prev_f = 1.0, prev_h = 1.0;
  for (double t : {2.0, 4.0, 8.0, 16.0}) {
    const auto sol = make_fiducial(t, k, g);
    const double df = std::abs(sol.f[i1] - k / 8.0), dh = std::abs(sol.h[i1]);
    CHECK(df < prev_f);
    CHECK(dh < prev_h);
    prev_f = df;
    prev_h = dh;
  }
  CHECK(prev_h < 1e-8);
}

TEST_CASE("make_limiting and g_infinity") {
  const auto g = std::make_shared<const PolarGrid>(RadialGrid::uniform(0.1, 4.0, 157), 32);
  const auto lim = make_limiting(1, g);
  CHECK(lim.is_limit());
  CHECK_FALSE(lim.profile.has_value());
  for (std::size_t i = 0; i < g->size(); i += 11) {
    const double r = g->radius(i);
    CHECK(std::abs(lim.metric[i](0, 0) - std::sqrt(r)) < 1e-15);
    CHECK(std::abs(lim.metric[i](1, 1) - 1.0 / std::sqrt(r)) < 1e-14);
  }
  for (double f : lim.f) CHECK(f == 0.125);

  const auto gi = g_infinity(1, g);
  for (std::size_t i = 0; i < g->size(); i += 13) {
    const Mat2 ggs = gi.g()[i] * gi.g()[i].adjoint();
    CHECK((ggs - lim.metric[i].inverse()).norm() < 1e-14);
  }
  const auto unit = std::make_shared<const PolarGrid>(RadialGrid::uniform(0.5, 1.0, 5), 8);
  const auto gu = g_infinity(3, unit);
  for (std::size_t j = 0; j < 8; ++j) CHECK((gu.g()[unit->index(4, j)] - Mat2::Identity()).norm() < 1e-15);

  CHECK_THROWS_AS(make_limiting(1, std::make_shared<const PolarGrid>(RadialGrid::uniform(0.0, 1.0, 9), 8)),
                  ContractError);
  CHECK_THROWS_AS(make_limiting(0, g), ContractError);
}

TEST_CASE("verify_decoupled") {
  SUBCASE("limiting pair: all three residuals vanish at second order") {
    DecoupledNorms prev{};
    for (std::size_t n : {157, 313, 625}) {
      const auto g = std::make_shared<const PolarGrid>(RadialGrid::uniform(0.1, 4.0, n), 32);
      const auto d = verify_decoupled(limiting_configuration(1, g), {0.2, 2.0});
      CHECK(d.bracket.sup < 1e-12);
      if (prev.curvature.sup > 0.0) {
        CHECK(prev.curvature.sup / d.curvature.sup > 3.5);
        CHECK(prev.holomorphic.sup / d.holomorphic.sup > 3.5);
      }
      prev = d;
    }
  }
  SUBCASE("finite t does not decouple") {
    const auto g = fiducial_grid(2.0, 2.0, 1, 257, 16);
    const auto sol = make_fiducial(2.0, 1, g);
    CHECK(verify_decoupled(sol.config, {0.1, 1.0}).bracket.sup > 1e-2);
  }
  SUBCASE("flat connection and zero Higgs field") {
    const auto g = std::make_shared<const PolarGrid>(RadialGrid::uniform(0.1, 1.0, 33), 8);
    const MatrixField zero(GridRef(g), FormDegree::one_zero);
    const auto d = verify_decoupled(HiggsConfiguration(zero, zero), {0.3, 0.8});
    CHECK(d.curvature.sup == 0.0);
    CHECK(d.bracket.sup == 0.0);
    CHECK(d.holomorphic.sup == 0.0);
    CHECK_THROWS_AS(verify_decoupled(HiggsConfiguration(zero, zero), {0.1, 0.8}), ContractError);
    CHECK_THROWS_AS(verify_decoupled(HiggsConfiguration(zero, zero), {0.3, 1.0}), ContractError);
  }
}

TEST_CASE("limiting configuration frame certificates") {
  const auto g = std::make_shared<const PolarGrid>(RadialGrid::uniform(0.2, 2.0, 65), 16);
  const double c = std::cos(0.4), s = std::sin(0.4);
  Mat2 u;
  u << Complex(c, 0.0), Complex(0.0, s), Complex(0.0, s), Complex(c, 0.0);
  const auto lc = limiting_configuration(2, g, u);
  CHECK(frame_defect(lc) < 1e-13);
  CHECK(max_difference(lc.config.phi, make_limiting(2, g).config.phi) > 0.1);
  CHECK(verify_decoupled(lc, {0.4, 1.5}).bracket.sup < 1e-12);
  Mat2 not_unitary = 2.0 * Mat2::Identity();
  CHECK_THROWS_AS(limiting_configuration(1, g, not_unitary), ContractError);
}

TEST_CASE("convergence_report on the unit annulus") {
  const auto rep = convergence_report({2.0, 4.0, 8.0, 16.0}, 1, {0.5, 1.0});
  CHECK(rep.monotone);
  CHECK(rep.expected_rate == doctest::Approx(8.0 / 3.0 * std::pow(0.5, 1.5)));
  CHECK(rep.rate_a > 0.0);
  CHECK(std::abs(rep.rate_a / rep.expected_rate - 1.0) < 0.1);
  CHECK(std::abs(rep.rate_phi / rep.expected_rate - 1.0) < 0.1);
  CHECK_FALSE(rep.asymptotic_window);

  const auto inf = convergence_report({4.0, kTInfinity}, 1, {0.5, 1.0});
  CHECK(inf.rows.back().distance_a == 0.0);
  CHECK(inf.rows.back().distance_phi == 0.0);
  CHECK(inf.monotone);
}
