#ifndef HYBRIDSDE_INTEGRATOR_HPP
#define HYBRIDSDE_INTEGRATOR_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "hybridsde/model.hpp"
#include "hybridsde/rng.hpp"
#include "hybridsde/switching.hpp"

namespace hybridsde {

struct IntegratorConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  double truncation_radius = 1e3;
  /// Must match the model's Levy cutoff when set (> 0); validation only.
  double small_jump_cutoff = -1.0;
  SwitchMode switch_mode = SwitchMode::ClockIntegration;
  std::uint64_t master_seed = 0;

  void validate(const ModelSpec& model) const;
};

struct SwitchEvent {
  double tau = 0.0;
  int from = 0;
  int to = 0;
  Vec x_pre;              // X(tau-)
  double clock_residual = 0.0;
};

struct JumpEvent {
  double t = 0.0;
  Vec mark;
  Vec displacement;
};

enum class Termination { Completed, TruncatedAtRadius };

/// One simulated trajectory on its grid.  Invariants: switch times strictly
/// increase, the regime is constant between switches, and x is continuous
/// across switches (only k jumps).
struct PathRecord {
  int dim = 1;
  std::vector<double> times;
  std::vector<double> states;   // flat, times.size() * dim
  std::vector<int> regimes;
  std::vector<SwitchEvent> switches;
  std::vector<JumpEvent> jumps;
  Termination termination = Termination::Completed;
  std::uint64_t master_seed = 0;
  std::uint64_t path_id = 0;

  std::size_t nodes() const { return times.size(); }
  std::span<const double> x_at(std::size_t i) const {
    return std::span<const double>(states).subspan(
        i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
  }
  /// Last grid node with time <= t (plus a small slack for grid round-off).
  std::size_t index_at(double t) const;

  SegmentView view() const {
    return SegmentView{times, states, dim};
  }
};

/// Frozen-regime Euler-Maruyama segment on [t0, t_end] with compound-Poisson
/// jumps above the cutoff and exact compensation of the retained part:
///   x' = x + [b - int_{|u|>eps} c nu] dt + sigma sqrt(dt) Z + sum_j c(x,k,U_j).
/// Coefficients freeze at step start; multiple jumps per step allowed.
PathRecord simulate_segment(const ModelSpec& model, std::span<const double> x0,
                            int k, double t0, double t_end,
                            const IntegratorConfig& cfg, RngStream& rng_w,
                            RngStream& rng_n);

/// Full interlacing loop: frozen-regime segments alternating with switching
/// clocks and post-switch regime draws.  The x-path is continuous across
/// switches; the grid restarts at each switch time.
PathRecord simulate_hybrid(const ModelSpec& model, std::span<const double> x0,
                           int k0, const IntegratorConfig& cfg,
                           std::uint64_t path_id = 0);

/// Path statistic: a fixed-length vector of functionals of one trajectory.
struct PathStatistic {
  std::function<Vec(const PathRecord&)> eval;
  std::size_t size = 1;
  /// When true, truncated paths are excluded from the estimate (they are
  /// still counted and reported).
  bool truncation_invalidates = true;
};

struct EnsembleReport {
  Vec mean;
  Vec se;
  std::size_t n_total = 0;
  std::size_t n_used = 0;
  std::size_t truncated_count = 0;
};

/// Independent paths on split rng substreams; reduction is sequential over
/// path index with compensated summation, so the result is identical for any
/// worker count.  Throws AllPathsTruncated when no path qualifies.
EnsembleReport ensemble(const ModelSpec& model, std::span<const double> x0,
                        int k0, const IntegratorConfig& cfg,
                        std::size_t n_paths, const PathStatistic& stat,
                        unsigned threads = 0);

/// Scalar convenience wrapper.
EnsembleReport ensemble_scalar(const ModelSpec& model,
                               std::span<const double> x0, int k0,
                               const IntegratorConfig& cfg,
                               std::size_t n_paths,
                               const std::function<double(const PathRecord&)>& f,
                               bool truncation_invalidates = true,
                               unsigned threads = 0);

}  // namespace hybridsde

#endif
