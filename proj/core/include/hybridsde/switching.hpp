#ifndef HYBRIDSDE_SWITCHING_HPP
#define HYBRIDSDE_SWITCHING_HPP

#include <optional>
#include <span>
#include <vector>

#include "hybridsde/model.hpp"
#include "hybridsde/rng.hpp"

namespace hybridsde {

/// Interval family at a frozen (x, k): consecutive half-open intervals
/// [break[i], break[i+1]) of width q_{k,target[i]}(x) tiling [0, q_k(x)).
struct IntervalTable {
  int k = 1;
  Vec base_x;
  std::vector<int> targets;   // l = 1..M skipping k, in order
  Vec breakpoints;            // size targets.size() + 1, breakpoints[0] = 0
  double total = 0.0;         // q_k(x)
};

IntervalTable build_interval_table(const ModelSpec& model,
                                   std::span<const double> x, int k);

/// Regime displacement l - k for the interval containing r (closed-left /
/// open-right; ties at a breakpoint belong to the next interval); 0 for
/// r >= q_k(x).  Total function.
int h_eval(const IntervalTable& table, double r);

/// Post-switch regime: l != k with probability q_kl(x)/q_k(x); k itself when
/// the row is empty (q_k(x) = 0).
int sample_post_switch(const ModelSpec& model, std::span<const double> x,
                       int k, RngStream& rng);

/// Frozen-regime path segment as seen by the switching clock: grid times and
/// the state at each node.
struct SegmentView {
  std::span<const double> times;
  std::span<const double> states;  // flat, times.size() * dim
  int dim = 1;

  std::span<const double> x_at(std::size_t i) const {
    return states.subspan(i * static_cast<std::size_t>(dim),
                          static_cast<std::size_t>(dim));
  }
};

enum class SwitchMode { ClockIntegration, Thinning };

struct SwitchDraw {
  bool fired = false;
  double theta = 0.0;           // holding duration from segment start
  double clock_value = 0.0;     // the Exp(1) draw (clock mode) / last uniform
};

/// Holding time of the switching clock along a simulated segment.
///
/// Clock integration: draw xi ~ Exp(1), accumulate the trapezoidal integral of
/// q_k(X(s)) over grid steps, fire when the accumulator crosses xi (linear
/// sub-step inversion).  Thinning: propose candidates at the majorant rate and
/// accept with probability q_k(X(t))/q_bar, X piecewise-constant on the grid.
/// Returns fired = false when the clock does not ring before the segment ends
/// (Beyond-Horizon).
SwitchDraw next_switch_time(const ModelSpec& model, const SegmentView& seg,
                            int k, RngStream& rng,
                            SwitchMode mode = SwitchMode::ClockIntegration,
                            std::optional<double> majorant = std::nullopt);

}  // namespace hybridsde

#endif
