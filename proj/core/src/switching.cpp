#include "hybridsde/switching.hpp"

#include <algorithm>
#include <cmath>

#include "hybridsde/errors.hpp"

namespace hybridsde {

IntervalTable build_interval_table(const ModelSpec& model,
                                   std::span<const double> x, int k) {
  const QRow row = q_row(model, x, k);
  IntervalTable t;
  t.k = k;
  t.base_x.assign(x.begin(), x.end());
  t.breakpoints.push_back(0.0);
  KahanSum acc;
  for (int l = 1; l <= model.regime_cap; ++l) {
    if (l == k) continue;
    t.targets.push_back(l);
    acc.add(row.rates[static_cast<std::size_t>(l)]);
    t.breakpoints.push_back(acc.value());
  }
  t.total = row.total;
  return t;
}

int h_eval(const IntervalTable& table, double r) {
  if (r < 0.0 || r >= table.total || table.targets.empty()) return 0;
  // first breakpoint strictly greater than r => interval [b_i, b_{i+1})
  const auto it = std::upper_bound(table.breakpoints.begin(),
                                   table.breakpoints.end(), r);
  std::size_t idx = static_cast<std::size_t>(it - table.breakpoints.begin());
  if (idx == 0) return 0;  // unreachable for r >= 0
  idx -= 1;
  if (idx >= table.targets.size()) return 0;
  // zero-width intervals are empty sets; skip to the interval that actually
  // contains r
  while (idx < table.targets.size() &&
         table.breakpoints[idx + 1] <= r) {
    ++idx;
  }
  if (idx >= table.targets.size()) return 0;
  return table.targets[idx] - table.k;
}

int sample_post_switch(const ModelSpec& model, std::span<const double> x,
                       int k, RngStream& rng) {
  const IntervalTable table = build_interval_table(model, x, k);
  if (table.total <= 0.0) return k;
  const double r = rng.u01() * table.total;
  const int d = h_eval(table, std::min(r, std::nextafter(table.total, 0.0)));
  return k + d;
}

namespace {

double q_total_at(const ModelSpec& model, const SegmentView& seg,
                  std::size_t node, int k) {
  return q_row(model, seg.x_at(node), k).total;
}

SwitchDraw clock_integration(const ModelSpec& model, const SegmentView& seg,
                             int k, RngStream& rng) {
  SwitchDraw out;
  const double xi = rng.exponential();
  out.clock_value = xi;
  if (seg.times.size() < 2) return out;
  double acc = 0.0;
  double q_prev = q_total_at(model, seg, 0, k);
  for (std::size_t i = 0; i + 1 < seg.times.size(); ++i) {
    const double dt = seg.times[i + 1] - seg.times[i];
    const double q_next = q_total_at(model, seg, i + 1, k);
    const double inc = 0.5 * (q_prev + q_next) * dt;
    if (acc + inc > xi) {
      // linear inversion of the crossing inside the step
      const double frac = (inc > 0.0) ? (xi - acc) / inc : 0.0;
      out.fired = true;
      out.theta = seg.times[i] - seg.times[0] + frac * dt;
      return out;
    }
    acc += inc;
    q_prev = q_next;
  }
  return out;
}

SwitchDraw thinning(const ModelSpec& model, const SegmentView& seg, int k,
                    RngStream& rng, double q_bar) {
  SwitchDraw out;
  if (seg.times.size() < 2 || q_bar <= 0.0) return out;
  const double t0 = seg.times.front();
  const double horizon = seg.times.back() - t0;
  double t = 0.0;
  for (;;) {
    t += rng.exponential(q_bar);
    if (t > horizon) return out;
    // piecewise-constant interpolation: state at the last grid node <= t
    const auto it = std::upper_bound(seg.times.begin(), seg.times.end(), t0 + t);
    std::size_t node = static_cast<std::size_t>(it - seg.times.begin());
    node = (node == 0) ? 0 : node - 1;
    const double q = q_total_at(model, seg, node, k);
    if (q > q_bar * (1.0 + 1e-12)) {
      throw MajorantViolated("thinning: q_k(X(t)) exceeds the supplied majorant");
    }
    const double u = rng.u01();
    out.clock_value = u;
    if (u * q_bar < q) {
      out.fired = true;
      out.theta = t;
      return out;
    }
  }
}

}  // namespace

SwitchDraw next_switch_time(const ModelSpec& model, const SegmentView& seg,
                            int k, RngStream& rng, SwitchMode mode,
                            std::optional<double> majorant) {
  if (mode == SwitchMode::Thinning) {
    double q_bar = 0.0;
    if (majorant) {
      q_bar = *majorant;
    } else if (model.switch_majorant) {
      q_bar = model.switch_majorant(k);
    } else {
      throw MajorantViolated("thinning mode requires a finite majorant");
    }
    return thinning(model, seg, k, rng, q_bar);
  }
  return clock_integration(model, seg, k, rng);
}

}  // namespace hybridsde
