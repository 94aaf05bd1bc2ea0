#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "hybridsde/common.hpp"
#include "hybridsde/errors.hpp"
#include "hybridsde/model.hpp"
#include "hybridsde/rng.hpp"

#include "support/oracles.hpp"

using namespace hybridsde;

namespace {

Vec random_point(RngStream& rng, int dim, double scale) {
  Vec x(dim);
  for (auto& v : x) v = scale * (2.0 * rng.u01() - 1.0);
  return x;
}

}  // namespace

TEST_CASE("reference model rates at |x| = 1") {
  const int M = 8;
  ModelSpec m = example1_model(0.5, M);
  const Vec x{1.0, 0.0, 0.0};  // |x|^2/(1+|x|^2) = 1/2
  for (int k = 1; k <= 4; ++k) {
    const QRow row = q_row(m, x, k);
    double expected_total = 0.0;
    for (int l = 1; l <= M; ++l) {
      const double e = (l == k) ? 0.0 : k * std::pow(2.0, -(l + 1));
      CHECK(row.rates[l] == doctest::Approx(e).epsilon(1e-12));
      expected_total += e;
    }
    CHECK(row.total == doctest::Approx(expected_total).epsilon(1e-12));
  }
}

TEST_CASE("rates vanish at the origin and the total matches the row sum") {
  ModelSpec m = example1_model(0.5, 6);
  const Vec zero{0.0, 0.0, 0.0};
  const QRow row0 = q_row(m, zero, 2);
  CHECK(row0.total == 0.0);
  for (double r : row0.rates) CHECK(r == 0.0);

  RngStream rng = RngStream::derive(11, 0, StreamRole::Clock);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec x = random_point(rng, 3, 4.0);
    const int k = 1 + static_cast<int>(rng.uniform_index(6));
    const QRow row = q_row(m, x, k);
    KahanSum s;
    for (double r : row.rates) {
      CHECK(r >= 0.0);
      s.add(r);
    }
    CHECK(row.total == doctest::Approx(s.value()).epsilon(1e-12));
    CHECK(row.rates[static_cast<std::size_t>(k)] == 0.0);
  }
}

TEST_CASE("zero model is motionless and absorbing") {
  ModelSpec m = zero_model(2, 3);
  const Vec x{1.0, -2.0};
  const Vec b = m.drift(x, 2);
  CHECK(b[0] == 0.0);
  CHECK(b[1] == 0.0);
  CHECK(frob2(m.diffusion(x, 2)) == 0.0);
  CHECK_FALSE(m.levy.has_jumps());
  CHECK(q_row(m, x, 2).total == 0.0);
}

TEST_CASE("reference model coefficients at the origin") {
  ModelSpec m = example1_model(0.7, 5);
  const Vec zero{0.0, 0.0, 0.0};
  for (int k = 1; k <= 5; ++k) {
    const Vec b = m.drift(zero, k);
    for (double v : b) CHECK(v == 0.0);
    const Mat s = m.diffusion(zero, k);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        CHECK(s(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-14));
  }
}

TEST_CASE("jump amplitude is calibrated to the measure's second moment") {
  for (double alpha : {0.3, 0.5, 1.0, 1.5}) {
    ModelSpec m = example1_model(alpha, 4);
    const Vec x{1.0, 1.0, 1.0};
    const Vec u{0.5, 0.0, 0.0};
    const Vec c = m.jump_coeff(x, 1, u);
    const double gamma = c[0] / 0.5;  // c_j = gamma * x_j^{2/3} |u|
    const double expected = std::sqrt((2.0 - alpha) / (8.0 * std::numbers::pi));
    CHECK(gamma == doctest::Approx(expected).epsilon(1e-8));
    // the calibration identity itself
    CHECK(gamma * gamma * m.levy.second_moment() ==
          doctest::Approx(0.5).epsilon(1e-8));
  }
}

TEST_CASE("growth identity of the reference model") {
  // 2<x,b> + |sigma|_F^2 + int |c|^2 nu  ==
  //   -(16 k / 9) sum x_j^4 - sum x_j^{4/3} + sqrt(2) sum x_j^{2/3} + 3
  ModelSpec m = example1_model(0.5, 6);
  RngStream rng = RngStream::derive(21, 0, StreamRole::Clock);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x = random_point(rng, 3, 3.0);
    const int k = 1 + static_cast<int>(rng.uniform_index(6));

    const Vec b = m.drift(x, k);
    double lhs = 2.0 * dot(x, b) + frob2(m.diffusion(x, k));
    // |c(x,k,u)|^2 = gamma^2 (sum x_j^{4/3}) |u|^2 integrates against nu
    const Vec cu = m.jump_coeff(x, k, Vec{0.5, 0.0, 0.0});
    double sum43 = 0.0, sum23 = 0.0, sum4 = 0.0;
    for (double v : x) {
      sum43 += pow43(v);
      sum23 += pow23(v);
      sum4 += v * v * v * v;
    }
    const double gamma2 = (cu[0] / (0.5 * pow23(x[0]))) * (cu[0] / (0.5 * pow23(x[0])));
    lhs += gamma2 * sum43 * m.levy.second_moment();

    const double rhs = -(16.0 * k / 9.0) * sum4 - sum43 +
                       std::numbers::sqrt2 * sum23 + 3.0;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
  }
}

TEST_CASE("diffusion square is symmetric and positive semidefinite") {
  ModelSpec m = example1_model(0.5, 4);
  RngStream rng = RngStream::derive(31, 0, StreamRole::Clock);
  for (int trial = 0; trial < 30; ++trial) {
    const Vec x = random_point(rng, 3, 2.0);
    const int k = 1 + static_cast<int>(rng.uniform_index(4));
    const Mat a = mmT(m.diffusion(x, k));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        CHECK(a(i, j) == doctest::Approx(a(j, i)).epsilon(1e-12));
    const Vec xi = random_point(rng, 3, 1.0);
    CHECK(dot(xi, mat_vec(a, xi)) >= -1e-12);
  }
}

TEST_CASE("geometric-rates model matches its closed form") {
  const double kappa = 2.0;
  const int M = 7;
  ModelSpec m = geometric_rates_model(kappa, M);
  const Vec x{0.3};
  for (int k = 1; k <= M; ++k) {
    const QRow row = q_row(m, x, k);
    double expected_total = 0.0;
    for (int l = 1; l <= M; ++l) {
      const double e = (l == k) ? 0.0 : kappa * l * std::pow(3.0, -l);
      CHECK(row.rates[l] == doctest::Approx(e).epsilon(1e-12));
      expected_total += e;
    }
    CHECK(row.total == doctest::Approx(expected_total).epsilon(1e-12));
    CHECK(m.switch_majorant);
    CHECK(m.switch_majorant(k) >= row.total);
  }
}

TEST_CASE("truncation tail mass matches direct summation") {
  const double kappa = 1.5;
  for (int M : {3, 6, 10}) {
    double direct = 0.0;
    for (int l = M + 1; l <= M + 400; ++l) direct += kappa * l * std::pow(3.0, -l);
    CHECK(truncation_tail_mass(kappa, M) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("levy decomposition splits at the cutoff") {
  LevyMeasureSpec nu(3, 1.0, 0.05,
                     [](double r) { return std::pow(r, -3.5); });
  const LevyDecomposition dec = levy_decompose(nu, 0.2);
  CHECK(dec.retained.eps() == doctest::Approx(0.2));
  CHECK(dec.cp_intensity == doctest::Approx(dec.retained.cp_intensity()).epsilon(1e-12));
  // re-cut intensity: 4 pi (0.2^{-1/2} - 1) / (1/2)
  const double expect =
      4.0 * std::numbers::pi * (std::pow(0.2, -0.5) - 1.0) / 0.5;
  CHECK(dec.cp_intensity == doctest::Approx(expect).epsilon(1e-7));
}

TEST_CASE("switching generator rows against the matrix oracle") {
  ModelSpec m = example1_model(0.5, 5);
  const Vec x{0.7, -0.4, 1.2};
  const Mat Q = oracles::q_matrix(m, x);
  for (int k = 1; k <= 5; ++k) {
    const QRow row = q_row(m, x, k);
    for (int l = 1; l <= 5; ++l) {
      if (l == k) continue;
      CHECK(row.rates[l] ==
            doctest::Approx(Q(static_cast<std::size_t>(k - 1),
                              static_cast<std::size_t>(l - 1))).epsilon(1e-14));
    }
    CHECK(row.total == doctest::Approx(-Q(static_cast<std::size_t>(k - 1),
                                          static_cast<std::size_t>(k - 1)))
                           .epsilon(1e-12));
  }
}

TEST_CASE("models parse from json and reject unknown fields") {
  ModelSpec m = model_from_json(R"({"family":"geometric_rates","kappa":1.0,"M":4})");
  CHECK(m.dim == 1);
  CHECK(m.regime_cap == 4);

  ModelSpec e = model_from_json(R"({"family":"example1","alpha":0.5,"M":6,"eps":0.1})");
  CHECK(e.dim == 3);
  CHECK(e.regime_cap == 6);
  CHECK(e.levy.eps() == doctest::Approx(0.1));

  CHECK_THROWS_AS(model_from_json(R"({"family":"zero","dim":1,"M":2,"bogus":3})"),
                  ConfigError);
  CHECK_THROWS_AS(model_from_json(R"({"family":"unheard_of"})"), ConfigError);
  CHECK_THROWS_AS(model_from_json("not json at all"), ConfigError);
}

TEST_CASE("bad rate evaluators are reported") {
  ModelSpec m = zero_model(1, 3);
  m.q_provider = [](std::span<const double>, int, int) { return -1.0; };
  CHECK_THROWS_AS(q_row(m, Vec{0.0}, 1), NegativeRate);
  m.q_provider = [](std::span<const double>, int, int) {
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(q_row(m, Vec{0.0}, 1), NonFiniteRate);
}
