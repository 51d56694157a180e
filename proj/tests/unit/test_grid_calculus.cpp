#include <cmath>
#include <random>

#include "doctest.h"
#include "hitchin/calculus.hpp"

using namespace hitchin;

namespace {

GridRef annulus(double a, double b, std::size_t nr, std::size_t nt = 32, Spacing s = Spacing::uniform_r) {
  return share(PolarGrid(RadialGrid::make(a, b, nr, s), nt));
}

Mat2 id() { return Mat2::Identity(); }

Mat2 e11() {
  Mat2 m = Mat2::Zero();
  m(0, 0) = 1.0;
  return m;
}

// Largest error of d_z (or d_zbar) of z^m zbar^n Id against the analytic derivative.
double monomial_error(const GridRef& g, int m, int n, bool bar) {
  auto f = MatrixField::sample(g, FormDegree::zero, [&](Complex z) -> Mat2 {
    return std::pow(z, m) * std::pow(std::conj(z), n) * id();
  });
  const auto d = bar ? partial_zbar(f) : partial_z(f);
  double err = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Complex z = node_point(g, i);
    Complex exact = 0.0;
    if (!bar && m > 0) exact = double(m) * std::pow(z, m - 1) * std::pow(std::conj(z), n);
    if (bar && n > 0) exact = double(n) * std::pow(z, m) * std::pow(std::conj(z), n - 1);
    err = std::max(err, (d[i] - exact * id()).norm());
  }
  return err;
}

}  // namespace

TEST_CASE("grid invariants are enforced") {
  CHECK_THROWS_AS(RadialGrid({1.0, 0.5, 2.0}, Spacing::uniform_r), ContractError);
  CHECK_THROWS_AS(RadialGrid({0.0, 0.5, 2.0}, Spacing::uniform_r), ContractError);
  CHECK_THROWS_AS(PolarGrid(RadialGrid::uniform(1, 2, 5), 7), ContractError);
  CHECK_THROWS_AS(PolarGrid(RadialGrid::uniform(1, 2, 5), 6), ContractError);
  const auto g = RadialGrid::log_uniform(1e-3, 2.0, 17);
  CHECK(g.r_min() == 1e-3);
  CHECK(g.r_max() == 2.0);
  const auto f = g.refined();
  CHECK(f.size() == 33);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(f[2 * i] == doctest::Approx(g[i]).epsilon(1e-14));
}

TEST_CASE("d_z and d_zbar on trivial fields") {
  const auto g = annulus(0.5, 2.0, 21);
  const auto c = MatrixField::constant(g, FormDegree::zero, id() * Complex(2.0, -1.0));
  CHECK(norms(d_z(c)).sup < 1e-12);
  CHECK(norms(d_zbar(c)).sup < 1e-12);

  const auto z = MatrixField::sample(g, FormDegree::zero, [](Complex w) -> Mat2 { return w * id(); });
  const auto dz = d_z(z);
  CHECK(dz.degree() == FormDegree::one_zero);
  CHECK(max_difference(dz, MatrixField::constant(g, FormDegree::one_zero, id())) < 1e-12);
  CHECK(norms(d_zbar(z)).sup < 1e-12);

  const auto zb = MatrixField::sample(g, FormDegree::zero, [](Complex w) -> Mat2 { return std::conj(w) * id(); });
  CHECK(norms(d_z(zb)).sup < 1e-12);
  CHECK(max_difference(d_zbar(zb), MatrixField::constant(g, FormDegree::zero_one, id())) < 1e-12);

  // On a (1,0) coefficient d_zbar returns the dz^dzbar coefficient -d_zbar a.
  const auto a = zb.with_degree(FormDegree::one_zero);
  const auto two = d_zbar(a);
  CHECK(two.degree() == FormDegree::two);
  CHECK(max_difference(two, MatrixField::constant(g, FormDegree::two, -id())) < 1e-12);

  CHECK_THROWS_AS(d_z(two), ContractError);
  CHECK_THROWS_AS(d_zbar(zb.with_degree(FormDegree::zero_one)), ContractError);
}

TEST_CASE("d_zbar of |z|^(1/2) E11 at z = 1 is E11/4") {
  // Analytic oracle: d_zbar r^{1/2} = (1/2) r^{-1/2} z / (2r); at z = 1 this is 1/4.
  double prev = 0.0;
  for (std::size_t nr : {101u, 201u}) {
    const auto g = annulus(0.5, 1.5, nr, 16);
    const auto f = MatrixField::sample(g, FormDegree::zero, [](Complex w) -> Mat2 { return std::sqrt(std::abs(w)) * e11(); });
    const auto d = partial_zbar(f);
    const auto& pg = as_polar(g);
    const std::size_t idx = pg.index((nr - 1) / 2, 0);
    CHECK(pg.point(idx).real() == doctest::Approx(1.0));
    const double err = (d[idx] - 0.25 * e11()).norm();
    CHECK(err < 1e-4);
    if (prev > 0.0) CHECK(std::log2(prev / err) > 1.9);
    prev = err;
  }
}

TEST_CASE("norms") {
  const auto g = annulus(1.0, 2.0, 11, 16);
  const auto zero = MatrixField(g, FormDegree::zero);
  CHECK(norms(zero).sup == 0.0);
  CHECK(norms(zero).l2 == 0.0);
  const auto one = MatrixField::constant(g, FormDegree::zero, id());
  const auto n = norms(one, {1.0, 2.0});
  CHECK(n.sup == doctest::Approx(std::sqrt(2.0)));
  CHECK(n.l2 == doctest::Approx(std::sqrt(6.0 * kPi)));
  // 2-forms are measured through their dx^dy coefficient.
  const auto n2 = norms(one.with_degree(FormDegree::two), {1.0, 2.0});
  CHECK(n2.sup == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK_THROWS_AS(norms(one, {3.0, 4.0}), ContractError);
  CHECK_THROWS_AS(norms(one, {2.0, 1.0}), ContractError);
}

TEST_CASE("linearity and conjugation duality hold to round-off") {
  const auto g = annulus(0.3, 1.7, 41, 16, Spacing::uniform_log_r);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  auto rnd_field = [&] {
    const Complex c1(nd(rng), nd(rng)), c2(nd(rng), nd(rng));
    Mat2 m1 = Mat2::Random(), m2 = Mat2::Random();
    return MatrixField::sample(g, FormDegree::zero, [&](Complex z) -> Mat2 {
      return std::exp(c1 * z) * m1 + std::conj(z) * z * c2 * m2;
    });
  };
  const auto f = rnd_field(), h = rnd_field();
  const Complex a(0.3, -1.2), b(2.0, 0.5);
  const auto lhs = d_z(a * f + b * h);
  const auto rhs = a * d_z(f) + b * d_z(h);
  CHECK(max_difference(lhs, rhs) < 1e-10 * norms(lhs).sup);

  const auto dbar_conj = partial_zbar(f.conj());
  const auto dz = partial_z(f);
  double worst = 0.0;
  for (std::size_t i = 0; i < dz.size(); ++i) worst = std::max(worst, (dbar_conj[i] - Mat2(dz[i].conjugate())).norm());
  CHECK(worst < 1e-12);
}

TEST_CASE("product rule defect and monomial errors converge at second order") {
  auto defect = [](const GridRef& g) {
    const auto f = MatrixField::sample(g, FormDegree::zero, [](Complex z) -> Mat2 {
      Mat2 m;
      m << z * z, std::exp(0.5 * std::conj(z)), 1.0, std::norm(z);
      return m;
    });
    const auto h = MatrixField::sample(g, FormDegree::zero, [](Complex z) -> Mat2 {
      Mat2 m;
      m << std::exp(z.real()), z, std::conj(z) * std::conj(z), 2.0;
      return m;
    });
    const auto lhs = partial_z(pointwise_product(f, h));
    const auto df = partial_z(f), dh = partial_z(h);
    double worst = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i)
      worst = std::max(worst, (lhs[i] - df[i] * h[i] - f[i] * dh[i]).norm());
    return worst;
  };
  const auto coarse = annulus(0.5, 1.5, 41, 16);
  const auto fine = share(as_polar(coarse).refined());
  const double e0 = defect(coarse), e1 = defect(fine);
  CHECK(e1 < e0);
  CHECK(std::log2(e0 / e1) > 1.9);

  int measured = 0;
  for (int m = 0; m <= 3; ++m) {
    for (int n = 0; m + n <= 3; ++n) {
      for (bool bar : {false, true}) {
        const double c = monomial_error(coarse, m, n, bar);
        const double f = monomial_error(fine, m, n, bar);
        if (c < 1e-10) {
          CHECK(f < 1e-10);  // exactly represented by the stencils
          continue;
        }
        ++measured;
        CHECK_MESSAGE(std::log2(c / f) >= 1.9, "m=" << m << " n=" << n << " bar=" << bar);
      }
    }
  }
  CHECK(measured >= 4);
}

TEST_CASE("torus derivatives are spectral") {
  const auto g = share(TorusGrid(2.0, 3.0, 16, 24));
  const auto f = MatrixField::sample(g, FormDegree::zero, [](Complex z) -> Mat2 {
    return std::sin(kPi * z.real()) * std::cos(2.0 * kPi * z.imag() / 3.0) * id();
  });
  const auto d = partial_z(f);
  double worst = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Complex z = node_point(g, i);
    const double x = z.real(), y = z.imag();
    const double fx = kPi * std::cos(kPi * x) * std::cos(2.0 * kPi * y / 3.0);
    const double fy = -2.0 * kPi / 3.0 * std::sin(kPi * x) * std::sin(2.0 * kPi * y / 3.0);
    worst = std::max(worst, (d[i] - 0.5 * Complex(fx, -fy) * id()).norm());
  }
  CHECK(worst < 1e-12);
  CHECK(norms(MatrixField::constant(g, FormDegree::zero, id())).l2 == doctest::Approx(std::sqrt(12.0)));
}
