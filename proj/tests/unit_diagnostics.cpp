#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "hybridsde/diagnostics.hpp"
#include "hybridsde/model.hpp"
#include "hybridsde/rng.hpp"

using namespace hybridsde;

namespace {

const CheckReport& find_report(const std::vector<CheckReport>& reports,
                               const std::string& id) {
  for (const auto& r : reports) {
    if (r.assumption_id == id) return r;
  }
  REQUIRE_MESSAGE(false, "missing report: " << id);
  static CheckReport dummy;
  return dummy;
}

}  // namespace

TEST_CASE("phi at the origin and against the closed form for unit zeta") {
  const auto one = [](double) { return 1.0; };
  CHECK(phi(Vec{0.0, 0.0}, one) == doctest::Approx(1.0).epsilon(1e-12));
  // zeta == 1: Phi(x) = 1 + |x|^2
  for (double r : {0.5, 1.0, 3.0}) {
    const Vec x{r, 0.0, 0.0};
    CHECK(std::abs(phi(x, one) - (1.0 + r * r)) < 1e-8);
  }
}

TEST_CASE("phi is increasing in |x|") {
  const auto zeta = [](double r) { return 1.0 + 0.1 * r; };
  RngStream rng = RngStream::derive(13, 0, StreamRole::Clock);
  for (int trial = 0; trial < 1000; ++trial) {
    const double a = 3.0 * rng.u01();
    const double b = a + 1e-3 + 3.0 * rng.u01();
    CHECK(phi(Vec{a}, zeta) < phi(Vec{b}, zeta));
  }
}

TEST_CASE("lyapunov function values on the reference model") {
  ModelSpec m = example1_model(0.5, 5);
  CHECK(lyapunov_V(Vec{0.0, 0.0, 0.0}, 1, m) == doctest::Approx(3.0).epsilon(1e-8));
  RngStream rng = RngStream::derive(14, 0, StreamRole::Clock);
  for (int trial = 0; trial < 100; ++trial) {
    Vec x(3);
    for (auto& v : x) v = 2.0 * (2.0 * rng.u01() - 1.0);
    const int k = 1 + static_cast<int>(rng.uniform_index(4));
    const double v = lyapunov_V(x, k, m);
    CHECK(v >= 2.0);
    CHECK(lyapunov_V(x, k + 1, m) >= v);
  }
}

TEST_CASE("modulus library shapes") {
  for (const ModulusSpec& mod :
       {ModulusSpec::identity(), ModulusSpec::r_log(), ModulusSpec::r_loglog()}) {
    CHECK(mod.rho(0.0) == 0.0);
    CHECK(mod.check_shape(1.0));
    CHECK(mod.rho(0.5) > 0.0);
  }
  CHECK(ModulusSpec::identity().rho(0.37) == doctest::Approx(0.37));
  // a convex function must fail the midpoint concavity test
  ModulusSpec bad;
  bad.name = "square";
  bad.rho = [](double r) { return r * r; };
  CHECK_FALSE(bad.check_shape(1.0));
}

TEST_CASE("generator annihilates constants") {
  ModelSpec m = example1_model(0.5, 4);
  TestFunction f;
  f.value = [](std::span<const double>, int) { return 0.7; };
  const GeneratorValue g = apply_generator(m, f, Vec{0.4, -1.0, 0.2}, 2);
  CHECK(std::abs(g.value) < 1e-9);
}

TEST_CASE("generator on a linear function reduces to the drift") {
  // jump integrand of a linear f cancels against the compensator exactly
  ModelSpec m = example1_model(0.5, 4);
  TestFunction f;
  f.value = [](std::span<const double> x, int) { return x[0]; };
  f.gradient = [](std::span<const double>, int) { return Vec{1.0, 0.0, 0.0}; };
  f.hessian = [](std::span<const double>, int) { return Mat(3, 3); };
  const Vec x{0.8, -0.3, 0.5};
  const GeneratorValue g = apply_generator(m, f, x, 2);
  CHECK(g.value == doctest::Approx(m.drift(x, 2)[0]).epsilon(1e-6));
}

TEST_CASE("generator on a quadratic with constant coefficients") {
  ModelSpec m = zero_model(2, 2);
  const Vec b{0.5, -1.0};
  m.drift = [b](std::span<const double>, int) { return b; };
  m.diffusion = [](std::span<const double>, int) {
    Mat s(2, 2);
    s(0, 0) = 1.0; s(0, 1) = 0.5; s(1, 0) = 0.0; s(1, 1) = 2.0;
    return s;
  };
  m.q_provider = [](std::span<const double>, int k, int l) {
    return (k == 1 && l == 2) ? 0.7 : 0.0;
  };
  TestFunction f;
  f.value = [](std::span<const double> x, int) { return dot(x, x); };
  f.gradient = [](std::span<const double> x, int) { return Vec{2.0 * x[0], 2.0 * x[1]}; };
  f.hessian = [](std::span<const double>, int) {
    Mat h(2, 2);
    h(0, 0) = h(1, 1) = 2.0;
    return h;
  };
  const Vec x{1.0, -2.0};
  const Mat a = mmT(m.diffusion(x, 1));
  const double want = 2.0 * dot(x, b) + a(0, 0) + a(1, 1);
  const GeneratorValue g = apply_generator(m, f, x, 1);
  CHECK(g.value == doctest::Approx(want).epsilon(1e-9));
  CHECK(g.jump_tail_bound == doctest::Approx(0.0));
}

TEST_CASE("finite-difference fallback agrees with analytic derivatives") {
  TestFunction f;
  f.value = [](std::span<const double> x, int) {
    return std::sin(x[0]) * std::cos(x[1]);
  };
  const Vec x{0.4, -0.7};
  const Vec grad = test_fn_gradient(f, x, 1);
  CHECK(grad[0] == doctest::Approx(std::cos(0.4) * std::cos(-0.7)).epsilon(1e-6));
  CHECK(grad[1] == doctest::Approx(-std::sin(0.4) * std::sin(-0.7)).epsilon(1e-6));
  const Mat hess = test_fn_hessian(f, x, 1);
  CHECK(hess(0, 0) == doctest::Approx(-std::sin(0.4) * std::cos(-0.7)).epsilon(1e-4));
  CHECK(hess(0, 1) == doctest::Approx(hess(1, 0)).epsilon(1e-4));
}

TEST_CASE("all growth constants vanish on the motionless model") {
  ModelSpec m = zero_model(2, 3);
  SamplePlan plan;
  plan.n_points = 500;
  plan.regimes = {1, 2, 3};
  for (const auto& rep : check_assumption_2_1(m, plan)) {
    CHECK(rep.fitted_constant <= 1e-12);
    CHECK_FALSE(rep.violated);
  }
}

TEST_CASE("reference-model growth-family constants") {
  ModelSpec m = example1_model(0.5, 8);
  SamplePlan plan;
  plan.n_points = 4000;
  plan.regimes = {1, 2, 3};
  plan.holder_delta = 1.0;
  const auto reports = check_assumption_2_1(m, plan);

  // Sum_l (l-k) q_kl <= 2k <= 2(1 + Phi + f(k))
  CHECK(find_report(reports, "switching-moment").fitted_constant <= 2.0 + 1e-9);
  // row-sum continuity with exponent 1 stays below 2 on low regimes
  CHECK(find_report(reports, "rate-continuity-holder").fitted_constant <= 2.0 + 1e-9);
  // q_k(x) <= k * sum 2^{-l-?} < k, so the linearity constant is at most 1
  CHECK(find_report(reports, "rate-linearity").fitted_constant <= 1.0 + 1e-9);
  CHECK(find_report(reports, "coefficient-growth").fitted_constant > 0.0);
}

TEST_CASE("fitted constants are monotone in the sample size") {
  ModelSpec m = example1_model(0.5, 5);
  SamplePlan small;
  small.n_points = 1000;
  small.regimes = {1, 2, 3};
  SamplePlan large = small;
  large.n_points = 3000;
  const auto a = check_assumption_2_1(m, small);
  const auto b = check_assumption_2_1(m, large);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b[i].fitted_constant >= a[i].fitted_constant - 1e-15);
  }
}

TEST_CASE("near-diagonal pair conditions on the reference model") {
  ModelSpec m = example1_model(0.5, 6);
  SamplePlan plan;
  plan.n_points = 2000;
  plan.regimes = {1, 2, 3};
  const auto reports =
      check_assumption_2_2_and_3_2(m, ModulusSpec::identity(), 5.0, 1.0, plan);
  // the pair path condition holds with a nonpositive left side
  CHECK(find_report(reports, "pair-path-condition").fitted_constant <= 1e-9);
  CHECK(find_report(reports, "rate-continuity-modulus").fitted_constant <= 10.0);
  CHECK_FALSE(find_report(reports, "pair-coupling-condition").violated);
}

TEST_CASE("one-dimensional pair conditions with a decreasing drift") {
  ModelSpec m = zero_model(1, 2);
  m.drift = [](std::span<const double> x, int) { return Vec{-x[0] * x[0] * x[0]}; };
  SamplePlan plan;
  plan.n_points = 2000;
  plan.regimes = {1, 2};
  const auto reports =
      check_assumption_2_2_and_3_2(m, ModulusSpec::identity(), 5.0, 1.0, plan);
  CHECK(find_report(reports, "pair-drift-1d").fitted_constant <= 1e-9);
  CHECK(find_report(reports, "pair-sigma-jump-1d").fitted_constant <= 1e-9);
  CHECK_FALSE(find_report(reports, "jump-map-monotone-1d").violated);
}

TEST_CASE("rate decay and ellipticity checks") {
  SamplePlan plan;
  plan.n_points = 1000;
  plan.regimes = {1, 2, 3};

  // q_kl = l 3^{-l}: the decay constant is exactly 1
  ModelSpec geo = geometric_rates_model(1.0, 6);
  const auto geo_reports = check_assumption_4_3_and_ellipticity(geo, 5.0, plan);
  CHECK(find_report(geo_reports, "rate-geometric-decay").fitted_constant ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(find_report(geo_reports, "rate-geometric-decay").violated);
  CHECK(find_report(geo_reports, "rate-uniform-bound").fitted_constant > 0.0);

  // the reference model's rates decay like 2^{-l}, slower than 3^{-l}:
  // the geometric-decay condition must be reported as violated
  ModelSpec ref = example1_model(0.5, 12);
  const auto ref_reports = check_assumption_4_3_and_ellipticity(ref, 5.0, plan);
  CHECK(find_report(ref_reports, "rate-geometric-decay").violated);
  // sigma sigma^T stays uniformly elliptic on the sampled ball
  const auto& ell = find_report(ref_reports, "uniform-ellipticity");
  CHECK(ell.fitted_constant > 0.0);
}

TEST_CASE("supermartingale trend on the motionless model") {
  ModelSpec m = zero_model(1, 2);
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  cfg.horizon = 1.0;
  cfg.master_seed = 3;
  const TrendReport r = supermartingale_test(m, Vec{1.0}, 1, 0.5, cfg, 200);
  CHECK(r.pass);
  REQUIRE(r.means.size() == 5);
  for (std::size_t i = 1; i < 5; ++i) CHECK(r.means[i] < r.means[i - 1]);
}

TEST_CASE("supermartingale negative control fails") {
  // outward drift grows V while H = 0 gives no discount: the trend must rise
  ModelSpec m = zero_model(1, 1);
  m.drift = [](std::span<const double> x, int) { return Vec{x[0] + 1.0}; };
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  cfg.horizon = 1.0;
  cfg.master_seed = 4;
  const TrendReport r = supermartingale_test(m, Vec{1.0}, 1, 0.0, cfg, 200);
  CHECK_FALSE(r.pass);
}
