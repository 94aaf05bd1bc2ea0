#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "hybridsde/errors.hpp"
#include "hybridsde/integrator.hpp"
#include "hybridsde/model.hpp"
#include "hybridsde/serialize.hpp"

#include "support/oracles.hpp"

using namespace hybridsde;

namespace {

IntegratorConfig basic_cfg(double dt, double T, std::uint64_t seed) {
  IntegratorConfig cfg;
  cfg.dt = dt;
  cfg.horizon = T;
  cfg.truncation_radius = 1e3;
  cfg.master_seed = seed;
  return cfg;
}

void check_record_invariants(const PathRecord& p) {
  // switch times strictly increase
  for (std::size_t i = 1; i < p.switches.size(); ++i) {
    REQUIRE(p.switches[i].tau > p.switches[i - 1].tau);
  }
  // regime constant between switches; regime changes only at switch times
  std::size_t s = 0;
  for (std::size_t i = 1; i < p.nodes(); ++i) {
    if (p.regimes[i] != p.regimes[i - 1]) {
      REQUIRE(s < p.switches.size());
      REQUIRE(p.switches[s].from == p.regimes[i - 1]);
      REQUIRE(p.switches[s].to == p.regimes[i]);
      REQUIRE(p.times[i] == doctest::Approx(p.switches[s].tau).epsilon(1e-12));
      // x continuous across the switch: the node at tau carries X(tau-)
      const auto pre = p.x_at(i);
      for (int j = 0; j < p.dim; ++j) {
        REQUIRE(pre[j] ==
                doctest::Approx(p.switches[s].x_pre[static_cast<std::size_t>(j)])
                    .epsilon(1e-12));
      }
      ++s;
    }
  }
}

}  // namespace

TEST_CASE("motionless model stays put") {
  ModelSpec m = zero_model(2, 3);
  const Vec x0{1.5, -0.5};
  const PathRecord p = simulate_hybrid(m, x0, 2, basic_cfg(0.01, 1.0, 1), 0);
  CHECK(p.switches.empty());
  CHECK(p.jumps.empty());
  CHECK(p.termination == Termination::Completed);
  for (std::size_t i = 0; i < p.nodes(); ++i) {
    CHECK(p.x_at(i)[0] == x0[0]);
    CHECK(p.x_at(i)[1] == x0[1]);
    CHECK(p.regimes[i] == 2);
  }
}

TEST_CASE("constant drift is integrated exactly") {
  ModelSpec m = zero_model(2, 1);
  m.drift = [](std::span<const double>, int) { return Vec{2.0, -1.0}; };
  const PathRecord p = simulate_hybrid(m, Vec{0.0, 1.0}, 1, basic_cfg(0.01, 1.0, 2), 0);
  const auto xT = p.x_at(p.nodes() - 1);
  CHECK(xT[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(xT[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("linear decay matches the closed-form solution to O(dt)") {
  ModelSpec m = zero_model(1, 1);
  m.drift = [](std::span<const double> x, int) { return Vec{-x[0]}; };
  const PathRecord p = simulate_hybrid(m, Vec{1.0}, 1, basic_cfg(1e-3, 1.0, 3), 0);
  CHECK(std::abs(p.x_at(p.nodes() - 1)[0] - std::exp(-1.0)) < 5e-3);
}

TEST_CASE("identical seed lineage gives identical serialized paths") {
  ModelSpec m = example1_model(0.5, 5);
  const Vec x0{0.5, 0.5, 0.5};
  const IntegratorConfig cfg = basic_cfg(1e-3, 1.0, 42);
  const PathRecord a = simulate_hybrid(m, x0, 1, cfg, 7);
  const PathRecord b = simulate_hybrid(m, x0, 1, cfg, 7);
  CHECK(path_csv(a) == path_csv(b));
  CHECK(a.switches.size() == b.switches.size());
  CHECK(a.jumps.size() == b.jumps.size());
  // a different path id must decouple the randomness
  const PathRecord c = simulate_hybrid(m, x0, 1, cfg, 8);
  CHECK(path_csv(a) != path_csv(c));
}

TEST_CASE("path record invariants hold on the reference model") {
  ModelSpec m = example1_model(0.5, 6);
  for (std::uint64_t pid = 0; pid < 20; ++pid) {
    const PathRecord p =
        simulate_hybrid(m, Vec{1.0, -1.0, 0.5}, 2, basic_cfg(1e-3, 2.0, 99), pid);
    check_record_invariants(p);
  }
}

TEST_CASE("no switching reduces the hybrid loop to one segment") {
  ModelSpec m = example1_model(0.5, 4);
  m.q_provider = [](std::span<const double>, int, int) { return 0.0; };
  const IntegratorConfig cfg = basic_cfg(1e-3, 1.0, 5);
  const PathRecord p = simulate_hybrid(m, Vec{0.3, 0.3, 0.3}, 3, cfg, 0);
  CHECK(p.switches.empty());
  for (int k : p.regimes) CHECK(k == 3);
}

TEST_CASE("frozen-x regime distribution matches the matrix exponential") {
  ModelSpec m = example1_frozen_model(5);
  const Vec x0{1.0, 1.0, 1.0};
  const int k0 = 1;
  const double T = 1.0;
  const Mat P = oracles::expm_uniformized(oracles::q_matrix(m, x0), T);

  const std::size_t n = 100000;
  const IntegratorConfig cfg = basic_cfg(0.01, T, 1234);
  std::vector<std::size_t> counts(6, 0);
  for (std::size_t pid = 0; pid < n; ++pid) {
    const PathRecord p = simulate_hybrid(m, x0, k0, cfg, pid);
    ++counts[static_cast<std::size_t>(p.regimes.back())];
  }
  for (int l = 1; l <= 5; ++l) {
    const double want = P(0, static_cast<std::size_t>(l - 1));
    const double got = static_cast<double>(counts[static_cast<std::size_t>(l)]) / n;
    const double se = std::sqrt(std::max(want * (1.0 - want), 1e-12) / n);
    CHECK(std::abs(got - want) < 3.0 * se + 2e-4);
  }
}

TEST_CASE("constant statistic has zero spread") {
  ModelSpec m = zero_model(1, 1);
  const EnsembleReport r = ensemble_scalar(
      m, Vec{0.0}, 1, basic_cfg(0.01, 0.5, 6), 500,
      [](const PathRecord&) { return 1.0; });
  CHECK(r.mean[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.se[0] == 0.0);
  CHECK(r.n_used == 500);
  CHECK(r.truncated_count == 0);
}

TEST_CASE("no-switch survival probability on a constant-rate clock") {
  const double lambda = 1.5, T = 1.0;
  ModelSpec m = zero_model(1, 2);
  m.q_provider = [lambda](std::span<const double>, int k, int l) {
    return (k == 1 && l == 2) ? lambda : 0.0;
  };
  const std::size_t n = 100000;
  const EnsembleReport r = ensemble_scalar(
      m, Vec{0.0}, 1, basic_cfg(0.01, T, 7), n,
      [](const PathRecord& p) { return p.switches.empty() ? 1.0 : 0.0; });
  const double want = std::exp(-lambda * T);
  CHECK(std::abs(r.mean[0] - want) < 3.0 * r.se[0] + 1e-4);
}

TEST_CASE("ensemble reductions do not depend on the worker count") {
  ModelSpec m = example1_model(0.5, 4);
  const IntegratorConfig cfg = basic_cfg(2e-3, 0.5, 2024);
  const auto stat = [](const PathRecord& p) {
    return norm2(p.x_at(p.nodes() - 1));
  };
  const EnsembleReport r1 =
      ensemble_scalar(m, Vec{0.5, 0.5, 0.5}, 1, cfg, 2000, stat, true, 1);
  const EnsembleReport r4 =
      ensemble_scalar(m, Vec{0.5, 0.5, 0.5}, 1, cfg, 2000, stat, true, 4);
  CHECK(r1.mean[0] == r4.mean[0]);  // bitwise
  CHECK(r1.se[0] == r4.se[0]);
}

TEST_CASE("radius truncation flags and the all-truncated failure") {
  ModelSpec m = zero_model(1, 1);
  m.drift = [](std::span<const double> x, int) { return Vec{x[0]}; };  // blows up
  IntegratorConfig cfg = basic_cfg(0.01, 20.0, 8);
  cfg.truncation_radius = 10.0;
  const PathRecord p = simulate_hybrid(m, Vec{1.0}, 1, cfg, 0);
  CHECK(p.termination == Termination::TruncatedAtRadius);
  CHECK(p.times.back() < 20.0);

  CHECK_THROWS_AS(ensemble_scalar(m, Vec{1.0}, 1, cfg, 50,
                                  [](const PathRecord&) { return 0.0; }),
                  AllPathsTruncated);
}

TEST_CASE("reference-model ensemble is stable under dt refinement") {
  ModelSpec m = example1_model(0.5, 5);
  const Vec x0{0.5, 0.5, 0.5};
  const auto stat = [](const PathRecord& p) {
    return norm2(p.x_at(p.nodes() - 1));
  };
  const std::size_t n = 10000;
  const EnsembleReport coarse =
      ensemble_scalar(m, x0, 1, basic_cfg(2e-3, 1.0, 31), n, stat);
  const EnsembleReport fine =
      ensemble_scalar(m, x0, 1, basic_cfg(1e-3, 1.0, 32), n, stat);
  CHECK(coarse.truncated_count == 0);
  CHECK(fine.truncated_count == 0);
  CHECK(std::isfinite(coarse.mean[0]));
  const double gap = std::abs(coarse.mean[0] - fine.mean[0]);
  const double se = std::hypot(coarse.se[0], fine.se[0]);
  CHECK(gap < 3.0 * se);
}

TEST_CASE("config validation rejects bad parameters") {
  ModelSpec m = example1_model(0.5, 3);
  IntegratorConfig cfg = basic_cfg(0.0, 1.0, 1);
  CHECK_THROWS_AS(cfg.validate(m), ConfigError);
  cfg = basic_cfg(1e-3, -1.0, 1);
  CHECK_THROWS_AS(cfg.validate(m), ConfigError);
  cfg = basic_cfg(1e-3, 1.0, 1);
  cfg.small_jump_cutoff = 0.2;  // disagrees with the model's cutoff (0.05)
  CHECK_THROWS_AS(cfg.validate(m), ConfigError);
  cfg.small_jump_cutoff = 0.05;
  CHECK_NOTHROW(cfg.validate(m));
}
