#include "hybridsde/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>

#include "hybridsde/errors.hpp"
#include "hybridsde/switching.hpp"

namespace hybridsde {

KilledSample simulate_killed(const ModelSpec& model, std::span<const double> x,
                             int k, double t, const IntegratorConfig& cfg,
                             std::uint64_t path_id, KillVariant variant) {
  cfg.validate(model);
  RngStream rng_w = RngStream::derive(cfg.master_seed, path_id, StreamRole::Brownian);
  RngStream rng_n = RngStream::derive(cfg.master_seed, path_id, StreamRole::Jump);
  RngStream rng_c = RngStream::derive(cfg.master_seed, path_id, StreamRole::Clock);

  KilledSample out;
  out.path = simulate_segment(model, x, k, 0.0, t, cfg, rng_w, rng_n);
  const std::size_t n = out.path.nodes();
  out.weights.assign(n, 1.0);

  if (variant == KillVariant::Weight) {
    double acc = 0.0;
    double q_prev = q_row(model, out.path.x_at(0), k).total;
    for (std::size_t i = 1; i < n; ++i) {
      const double q_next = q_row(model, out.path.x_at(i), k).total;
      acc += 0.5 * (q_prev + q_next) * (out.path.times[i] - out.path.times[i - 1]);
      out.weights[i] = std::exp(-acc);
      q_prev = q_next;
    }
  } else {
    const SwitchDraw draw =
        next_switch_time(model, out.path.view(), k, rng_c, cfg.switch_mode);
    if (draw.fired) {
      out.kill_time = out.path.times.front() + draw.theta;
      for (std::size_t i = 0; i < n; ++i) {
        if (out.path.times[i] >= out.kill_time) out.weights[i] = 0.0;
      }
    }
  }
  return out;
}

namespace {

void run_workers(std::size_t n_paths, unsigned threads,
                 const std::function<void(std::size_t, std::size_t)>& body) {
  std::exception_ptr first_error;
  std::mutex err_mutex;
  auto guarded = [&](std::size_t lo, std::size_t hi) {
    try {
      body(lo, hi);
    } catch (...) {
      std::lock_guard<std::mutex> g(err_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_paths));
  if (threads <= 1) {
    guarded(0, n_paths);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_paths + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(n_paths, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(guarded, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

MeanSe reduce(const std::vector<double>& values, const std::vector<char>& bad,
              std::size_t& truncated_count) {
  KahanSum sum;
  std::size_t used = 0;
  for (std::size_t p = 0; p < values.size(); ++p) {
    if (bad[p]) {
      ++truncated_count;
      continue;
    }
    ++used;
    sum.add(values[p]);
  }
  MeanSe r;
  r.n = used;
  if (used == 0) return r;
  r.mean = sum.value() / static_cast<double>(used);
  if (used >= 2) {
    KahanSum sq;
    for (std::size_t p = 0; p < values.size(); ++p) {
      if (bad[p]) continue;
      const double dv = values[p] - r.mean;
      sq.add(dv * dv);
    }
    r.se = std::sqrt(sq.value() / static_cast<double>(used - 1) /
                     static_cast<double>(used));
  }
  return r;
}

/// Per-switch-count split of int_0^T e^{-alpha t} f(X, Lambda) dt along one
/// hybrid path.  Each grid interval carries the regime of its left node (the
/// node AT a switch time already carries the post-switch regime), so the
/// switch count on an interval is the number of switch times <= its left end.
struct SeriesSplit {
  Vec per_count;    // counts 0..m
  double overflow = 0.0;
  double total = 0.0;
};

SeriesSplit split_resolvent_integral(const PathRecord& rec,
                                     const ScalarField& f, double alpha,
                                     int m) {
  SeriesSplit out;
  out.per_count.assign(static_cast<std::size_t>(m) + 1, 0.0);
  std::size_t sw = 0;
  KahanSum total;
  std::vector<KahanSum> per(static_cast<std::size_t>(m) + 1);
  KahanSum overflow;
  for (std::size_t i = 0; i + 1 < rec.nodes(); ++i) {
    const double t0 = rec.times[i];
    const double t1 = rec.times[i + 1];
    while (sw < rec.switches.size() &&
           rec.switches[sw].tau <= t0 + 1e-15) {
      ++sw;
    }
    const int k = rec.regimes[i];
    const double v0 = std::exp(-alpha * t0) * f(rec.x_at(i), k);
    const double v1 = std::exp(-alpha * t1) * f(rec.x_at(i + 1), k);
    const double piece = 0.5 * (v0 + v1) * (t1 - t0);
    total.add(piece);
    if (sw <= static_cast<std::size_t>(m)) {
      per[sw].add(piece);
    } else {
      overflow.add(piece);
    }
  }
  for (std::size_t c = 0; c < per.size(); ++c) out.per_count[c] = per[c].value();
  out.overflow = overflow.value();
  out.total = total.value();
  return out;
}

}  // namespace

ResolventEstimate resolvent_G(const ModelSpec& model, const ScalarField& f,
                              double f_sup, double alpha,
                              std::span<const double> x, int k,
                              const IntegratorConfig& cfg, std::size_t n_paths,
                              unsigned threads) {
  if (!(alpha > 0.0)) throw ConfigError("resolvent_G: alpha must be > 0");
  IntegratorConfig run = cfg;
  run.horizon = resolvent_horizon(alpha);

  std::vector<double> values(n_paths, 0.0);
  std::vector<char> bad(n_paths, 0);
  Vec x0(x.begin(), x.end());
  run_workers(n_paths, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const PathRecord rec = simulate_hybrid(model, x0, k, run, p);
      bad[p] = rec.termination == Termination::TruncatedAtRadius;
      values[p] = split_resolvent_integral(rec, f, alpha, 0).total;
    }
  });

  ResolventEstimate est;
  est.alpha = alpha;
  est.t_cut = run.horizon;
  est.tail_bound = f_sup * std::exp(-alpha * run.horizon) / alpha;
  const MeanSe r = reduce(values, bad, est.truncated_count);
  if (r.n == 0) {
    throw AllPathsTruncated("resolvent_G: every path hit the truncation radius");
  }
  est.value = r.mean;
  est.se = r.se;
  est.n_used = r.n;
  return est;
}

ResolventEstimate killed_resolvent(const ModelSpec& model,
                                   const ScalarField& f, double f_sup,
                                   double alpha, std::span<const double> x,
                                   int k, const IntegratorConfig& cfg,
                                   std::size_t n_paths, KillVariant variant,
                                   unsigned threads) {
  if (!(alpha > 0.0)) throw ConfigError("killed_resolvent: alpha must be > 0");
  const double t_cut = resolvent_horizon(alpha);

  std::vector<double> values(n_paths, 0.0);
  std::vector<char> bad(n_paths, 0);
  Vec x0(x.begin(), x.end());
  run_workers(n_paths, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const KilledSample s =
          simulate_killed(model, x0, k, t_cut, cfg, p, variant);
      bad[p] = s.path.termination == Termination::TruncatedAtRadius;
      KahanSum acc;
      for (std::size_t i = 0; i + 1 < s.path.nodes(); ++i) {
        const double t0 = s.path.times[i];
        const double t1 = s.path.times[i + 1];
        const double v0 =
            std::exp(-alpha * t0) * s.weights[i] * f(s.path.x_at(i), k);
        const double v1 =
            std::exp(-alpha * t1) * s.weights[i + 1] * f(s.path.x_at(i + 1), k);
        acc.add(0.5 * (v0 + v1) * (t1 - t0));
      }
      values[p] = acc.value();
    }
  });

  ResolventEstimate est;
  est.alpha = alpha;
  est.t_cut = t_cut;
  est.tail_bound = f_sup * std::exp(-alpha * t_cut) / alpha;
  const MeanSe r = reduce(values, bad, est.truncated_count);
  if (r.n == 0) {
    throw AllPathsTruncated(
        "killed_resolvent: every path hit the truncation radius");
  }
  est.value = r.mean;
  est.se = r.se;
  est.n_used = r.n;
  return est;
}

ResolventEstimate series_psi(const ModelSpec& model, const ScalarField& f,
                             double f_sup, double alpha,
                             std::span<const double> x, int k,
                             const IntegratorConfig& cfg, std::size_t n_paths,
                             int i, unsigned threads) {
  if (!(alpha > 0.0)) throw ConfigError("series_psi: alpha must be > 0");
  if (i < 0) throw ConfigError("series_psi: term index must be >= 0");
  IntegratorConfig run = cfg;
  run.horizon = resolvent_horizon(alpha);

  std::vector<double> values(n_paths, 0.0);
  std::vector<char> bad(n_paths, 0);
  Vec x0(x.begin(), x.end());
  run_workers(n_paths, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const PathRecord rec = simulate_hybrid(model, x0, k, run, p);
      bad[p] = rec.termination == Termination::TruncatedAtRadius;
      values[p] = split_resolvent_integral(rec, f, alpha, i)
                      .per_count[static_cast<std::size_t>(i)];
    }
  });

  ResolventEstimate est;
  est.alpha = alpha;
  est.t_cut = run.horizon;
  est.tail_bound = f_sup * std::exp(-alpha * run.horizon) / alpha;
  const MeanSe r = reduce(values, bad, est.truncated_count);
  if (r.n == 0) {
    throw AllPathsTruncated("series_psi: every path hit the truncation radius");
  }
  est.value = r.mean;
  est.se = r.se;
  est.n_used = r.n;
  return est;
}

SeriesReport verify_series(const ModelSpec& model, const ScalarField& f,
                           double f_sup, double alpha, double kappa,
                           std::span<const double> x, int k, int m,
                           const IntegratorConfig& cfg, std::size_t n_paths,
                           unsigned threads) {
  if (!(alpha > 0.0)) throw ConfigError("verify_series: alpha must be > 0");
  if (m < 0) throw ConfigError("verify_series: m must be >= 0");
  IntegratorConfig run = cfg;
  run.horizon = resolvent_horizon(alpha);

  const std::size_t width = static_cast<std::size_t>(m) + 1;
  std::vector<double> totals(n_paths, 0.0);
  std::vector<double> remainders(n_paths, 0.0);
  std::vector<Vec> terms(n_paths);
  std::vector<char> bad(n_paths, 0);
  Vec x0(x.begin(), x.end());
  run_workers(n_paths, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const PathRecord rec = simulate_hybrid(model, x0, k, run, p);
      bad[p] = rec.termination == Termination::TruncatedAtRadius;
      SeriesSplit split = split_resolvent_integral(rec, f, alpha, m);
      totals[p] = split.total;
      remainders[p] = split.overflow;
      terms[p] = std::move(split.per_count);
    }
  });

  SeriesReport rep;
  rep.alpha = alpha;
  rep.kappa = kappa;
  rep.m = m;
  rep.threshold_warning = alpha < alpha_threshold(kappa);
  rep.tail = f_sup * std::exp(-alpha * run.horizon) / alpha;
  rep.B = std::pow(3.0 * kappa / (4.0 * alpha), m + 1) * f_sup / alpha;

  const MeanSe rem = reduce(remainders, bad, rep.truncated_count);
  if (rem.n == 0) {
    throw AllPathsTruncated(
        "verify_series: every path hit the truncation radius");
  }
  rep.n_used = rem.n;
  rep.D = std::abs(rem.mean);
  rep.se = rem.se;

  std::size_t scratch = 0;
  const MeanSe tot = reduce(totals, bad, scratch);
  rep.g_mean = tot.mean;
  rep.g_se = tot.se;
  rep.psi_means.assign(width, 0.0);
  rep.psi_ses.assign(width, 0.0);
  for (std::size_t c = 0; c < width; ++c) {
    std::vector<double> col(n_paths, 0.0);
    for (std::size_t p = 0; p < n_paths; ++p) col[p] = terms[p].empty() ? 0.0 : terms[p][c];
    scratch = 0;
    const MeanSe ms = reduce(col, bad, scratch);
    rep.psi_means[c] = ms.mean;
    rep.psi_ses[c] = ms.se;
  }

  rep.pass = rep.D <= rep.B + 3.0 * rep.se + 2.0 * rep.tail;
  return rep;
}

}  // namespace hybridsde
