#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "hybridsde/common.hpp"
#include "hybridsde/errors.hpp"
#include "hybridsde/levy.hpp"
#include "hybridsde/quadrature.hpp"
#include "hybridsde/rng.hpp"

using namespace hybridsde;

TEST_CASE("kahan summation keeps large alternating sums exact") {
  KahanSum s;
  for (int i = 0; i < 1000000; ++i) {
    s.add(0.1);
    s.add(-0.1);
  }
  s.add(1.0);
  CHECK(s.value() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("signed fractional powers") {
  CHECK(cbrt_signed(-8.0) == doctest::Approx(-2.0));
  CHECK(pow23(-8.0) == doctest::Approx(4.0));
  CHECK(pow43(-8.0) == doctest::Approx(16.0));
  CHECK(pow23(0.0) == 0.0);
}

TEST_CASE("matrix helpers") {
  Mat m(2, 2);
  m(0, 0) = 1.0; m(0, 1) = 2.0; m(1, 0) = 3.0; m(1, 1) = 4.0;
  CHECK(frob2(m) == doctest::Approx(30.0));
  const Mat a = mmT(m);
  CHECK(a(0, 0) == doctest::Approx(5.0));
  CHECK(a(0, 1) == doctest::Approx(11.0));
  CHECK(a(1, 0) == doctest::Approx(a(0, 1)));
  const Vec v = mat_vec(m, Vec{1.0, 1.0});
  CHECK(v[0] == doctest::Approx(3.0));
  CHECK(v[1] == doctest::Approx(7.0));
}

TEST_CASE("rng streams are deterministic and role-disjoint") {
  RngStream a = RngStream::derive(42, 7, StreamRole::Brownian);
  RngStream b = RngStream::derive(42, 7, StreamRole::Brownian);
  RngStream c = RngStream::derive(42, 7, StreamRole::Jump);
  bool all_equal = true, any_equal_across = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    all_equal = all_equal && (va == b.next_u64());
    any_equal_across = any_equal_across || (va == c.next_u64());
  }
  CHECK(all_equal);
  CHECK_FALSE(any_equal_across);
}

TEST_CASE("rng distributional sanity") {
  RngStream rng = RngStream::derive(1, 0, StreamRole::Brownian);
  const std::size_t n = 200000;
  KahanSum mean, sq, emean, pmean, psq;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.normal();
    mean.add(z);
    sq.add(z * z);
    emean.add(rng.exponential(2.0));
    const double p = static_cast<double>(rng.poisson(3.0));
    pmean.add(p);
    psq.add(p * p);
  }
  const double nn = static_cast<double>(n);
  CHECK(mean.value() / nn == doctest::Approx(0.0).epsilon(1).scale(3.0 / std::sqrt(nn)));
  CHECK(sq.value() / nn == doctest::Approx(1.0).epsilon(0.02));
  CHECK(emean.value() / nn == doctest::Approx(0.5).epsilon(0.02));
  const double pm = pmean.value() / nn;
  CHECK(pm == doctest::Approx(3.0).epsilon(0.02));
  CHECK(psq.value() / nn - pm * pm == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("u01 stays inside the open interval") {
  RngStream rng = RngStream::derive(9, 9, StreamRole::Clock);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.u01();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("adaptive quadrature on smooth integrands") {
  CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi) ==
        doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("endpoint-singular quadrature toward zero") {
  // int_0^1 r^{-1/2} dr = 2
  const double v = integrate_to_zero([](double r) { return 1.0 / std::sqrt(r); },
                                     1.0, 1e-10);
  CHECK(v == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("bisection root finding") {
  const double r = bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0);
  CHECK(r == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  CHECK_THROWS_AS(bisect([](double x) { return x + 10.0; }, 0.0, 1.0),
                  InversionBracketFailure);
}

TEST_CASE("sphere areas") {
  CHECK(sphere_area(1) == doctest::Approx(2.0));
  CHECK(sphere_area(2) == doctest::Approx(2.0 * std::numbers::pi));
  CHECK(sphere_area(3) == doctest::Approx(4.0 * std::numbers::pi));
}

TEST_CASE("power-law radial measure moments") {
  const double alpha = 0.5;
  LevyMeasureSpec nu(3, 1.0, 0.05,
                     [alpha](double r) { return std::pow(r, -(3.0 + alpha)); });
  const double pi = std::numbers::pi;
  // mass above eps: 4 pi (eps^-alpha - 1)/alpha
  CHECK(nu.cp_intensity() ==
        doctest::Approx(4.0 * pi * (std::pow(0.05, -alpha) - 1.0) / alpha)
            .epsilon(1e-8));
  // second moment over the whole support: 4 pi / (2 - alpha)
  CHECK(nu.second_moment() ==
        doctest::Approx(4.0 * pi / (2.0 - alpha)).epsilon(1e-8));
  CHECK(nu.has_jumps());
}

TEST_CASE("mark sampling stays in the retained band with correct radial law") {
  const double alpha = 0.5, eps = 0.1;
  LevyMeasureSpec nu(3, 1.0, eps,
                     [alpha](double r) { return std::pow(r, -(3.0 + alpha)); });
  RngStream rng = RngStream::derive(5, 0, StreamRole::Jump);
  const std::size_t n = 100000;
  std::size_t below_median = 0;
  KahanSum rsum;
  // radial density above eps is proportional to r^{-1-alpha}; its cdf is
  // (eps^-a - r^-a)/(eps^-a - 1), giving a closed-form median and mean
  const double a = alpha;
  const double za = std::pow(eps, -a) - 1.0;
  const double median = std::pow(std::pow(eps, -a) - 0.5 * za, -1.0 / a);
  const double mean_r =
      (a / za) * (std::pow(eps, 1.0 - a) - 1.0) / (1.0 - a) * -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec u = nu.sample_mark(rng);
    const double r = norm2(u);
    REQUIRE(r > eps * (1.0 - 1e-9));
    REQUIRE(r <= 1.0 + 1e-12);
    if (r < median) ++below_median;
    rsum.add(r);
  }
  const double frac = static_cast<double>(below_median) / n;
  CHECK(frac == doctest::Approx(0.5).epsilon(0.02));
  CHECK(rsum.value() / n == doctest::Approx(std::abs(mean_r)).epsilon(0.02));
}

TEST_CASE("sampled directions are isotropic on the sphere") {
  LevyMeasureSpec nu(3, 1.0, 0.5, [](double) { return 1.0; });
  RngStream rng = RngStream::derive(6, 0, StreamRole::Jump);
  const std::size_t n = 100000;
  Vec mean(3, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec u = nu.sample_mark(rng);
    const double r = norm2(u);
    for (int j = 0; j < 3; ++j) mean[j] += u[j] / r;
  }
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(mean[j]) / n < 3.0 / std::sqrt(static_cast<double>(n)) * 0.6);
  }
}

TEST_CASE("divergent mass is rejected") {
  CHECK_THROWS_AS(LevyMeasureSpec(1, 1.0, 0.1,
                                  [](double r) { return std::pow(r, -4.0); }),
                  DivergentMass);
}
