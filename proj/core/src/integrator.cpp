#include "hybridsde/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>

#include "hybridsde/errors.hpp"

namespace hybridsde {

void IntegratorConfig::validate(const ModelSpec& model) const {
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (!(horizon > 0.0)) throw ConfigError("horizon must be > 0");
  if (!(truncation_radius > 0.0)) throw ConfigError("truncation_radius must be > 0");
  if (small_jump_cutoff > 0.0 && model.levy.has_jumps() &&
      std::abs(small_jump_cutoff - model.levy.eps()) > 1e-15) {
    throw ConfigError(
        "small_jump_cutoff disagrees with the model's Levy cutoff");
  }
}

std::size_t PathRecord::index_at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t + 1e-12);
  std::size_t i = static_cast<std::size_t>(it - times.begin());
  return (i == 0) ? 0 : i - 1;
}

namespace {

void append_node(PathRecord& rec, double t, std::span<const double> x, int k) {
  rec.times.push_back(t);
  rec.states.insert(rec.states.end(), x.begin(), x.end());
  rec.regimes.push_back(k);
}

void check_finite(std::span<const double> x) {
  for (double c : x) {
    if (!std::isfinite(c)) {
      throw NonFiniteState("state coordinate became non-finite");
    }
  }
}

}  // namespace

PathRecord simulate_segment(const ModelSpec& model, std::span<const double> x0,
                            int k, double t0, double t_end,
                            const IntegratorConfig& cfg, RngStream& rng_w,
                            RngStream& rng_n) {
  const int d = model.dim;
  PathRecord rec;
  rec.dim = d;
  rec.master_seed = cfg.master_seed;

  Vec x(x0.begin(), x0.end());
  append_node(rec, t0, x, k);

  const bool jumps = model.levy.has_jumps();
  const double lambda = jumps ? model.levy.cp_intensity() : 0.0;

  double t = t0;
  while (t < t_end - 1e-15) {
    const double dt = std::min(cfg.dt, t_end - t);
    const double sq_dt = std::sqrt(dt);

    Vec drift = model.drift(x, k);
    if (jumps) {
      const Vec comp = model.jump_compensator(x, k);
      for (int j = 0; j < d; ++j) drift[j] -= comp[j];
    }

    const Mat sigma = model.diffusion(x, k);
    Vec z(d);
    for (auto& v : z) v = rng_w.normal();
    const Vec dw = mat_vec(sigma, z);

    Vec x_next(d);
    for (int j = 0; j < d; ++j) {
      x_next[j] = x[j] + drift[j] * dt + sq_dt * dw[j];
    }

    if (lambda > 0.0) {
      const std::uint64_t n_jumps = rng_n.poisson(lambda * dt);
      for (std::uint64_t j = 0; j < n_jumps; ++j) {
        const Vec u = model.levy.sample_mark(rng_n);
        const Vec c = model.jump_coeff(x, k, u);  // frozen at step start
        for (int i = 0; i < d; ++i) x_next[i] += c[i];
        rec.jumps.push_back(JumpEvent{t + dt, u, c});
      }
    }

    check_finite(x_next);
    x = std::move(x_next);
    t += dt;
    append_node(rec, t, x, k);

    if (norm2(x) > cfg.truncation_radius) {
      rec.termination = Termination::TruncatedAtRadius;
      return rec;
    }
  }
  return rec;
}

namespace {

/// Copies seg nodes with time < tau into rec, then appends the linearly
/// interpolated node at tau itself carrying the *new* regime.
Vec splice_until(PathRecord& rec, const PathRecord& seg, double tau,
                 int new_regime) {
  const int d = seg.dim;
  std::size_t i = 0;
  Vec x_tau(seg.x_at(0).begin(), seg.x_at(0).end());
  for (; i < seg.nodes() && seg.times[i] < tau - 1e-15; ++i) {
    append_node(rec, seg.times[i], seg.x_at(i), seg.regimes[i]);
  }
  if (i == 0) i = 1;
  if (i >= seg.nodes()) i = seg.nodes() - 1;
  const double t_lo = seg.times[i - 1];
  const double t_hi = seg.times[i];
  const double w = (t_hi > t_lo) ? (tau - t_lo) / (t_hi - t_lo) : 0.0;
  const auto a = seg.x_at(i - 1);
  const auto b = seg.x_at(i);
  for (int j = 0; j < d; ++j) x_tau[j] = a[j] + w * (b[j] - a[j]);
  append_node(rec, tau, x_tau, new_regime);
  return x_tau;
}

void copy_jumps_before(PathRecord& rec, const PathRecord& seg, double tau) {
  for (const auto& j : seg.jumps) {
    if (j.t <= tau + 1e-15) rec.jumps.push_back(j);
  }
}

}  // namespace

PathRecord simulate_hybrid(const ModelSpec& model, std::span<const double> x0,
                           int k0, const IntegratorConfig& cfg,
                           std::uint64_t path_id) {
  cfg.validate(model);
  RngStream rng_w = RngStream::derive(cfg.master_seed, path_id, StreamRole::Brownian);
  RngStream rng_n = RngStream::derive(cfg.master_seed, path_id, StreamRole::Jump);
  RngStream rng_c = RngStream::derive(cfg.master_seed, path_id, StreamRole::Clock);

  PathRecord rec;
  rec.dim = model.dim;
  rec.master_seed = cfg.master_seed;
  rec.path_id = path_id;

  Vec x(x0.begin(), x0.end());
  int k = k0;
  double t = 0.0;
  const double T = cfg.horizon;

  while (t < T - 1e-15) {
    PathRecord seg =
        simulate_segment(model, x, k, t, T, cfg, rng_w, rng_n);
    const SwitchDraw draw = next_switch_time(model, seg.view(), k, rng_c,
                                             cfg.switch_mode);

    const double seg_end = seg.times.back();
    if (!draw.fired || t + draw.theta >= seg_end - 1e-15) {
      // no switch before the segment ends (or before truncation)
      const std::size_t skip = rec.nodes() > 0 ? 1 : 0;  // shared node at t
      for (std::size_t i = skip; i < seg.nodes(); ++i) {
        append_node(rec, seg.times[i], seg.x_at(i), seg.regimes[i]);
      }
      rec.jumps.insert(rec.jumps.end(), seg.jumps.begin(), seg.jumps.end());
      rec.termination = seg.termination;
      return rec;
    }

    const double tau = t + draw.theta;
    if (rec.nodes() > 0) {
      // drop the node at t; splice_until re-emits the segment from t onward
      rec.times.pop_back();
      rec.regimes.pop_back();
      rec.states.resize(rec.states.size() - static_cast<std::size_t>(rec.dim));
    }
    copy_jumps_before(rec, seg, tau);
    const Vec x_tau_pre = [&] {
      PathRecord probe;
      probe.dim = seg.dim;
      Vec xt = splice_until(probe, seg, tau, k);
      rec.times.insert(rec.times.end(), probe.times.begin(), probe.times.end() - 1);
      rec.regimes.insert(rec.regimes.end(), probe.regimes.begin(), probe.regimes.end() - 1);
      rec.states.insert(rec.states.end(), probe.states.begin(),
                        probe.states.end() - static_cast<std::ptrdiff_t>(seg.dim));
      return xt;
    }();

    const int l = sample_post_switch(model, x_tau_pre, k, rng_c);
    rec.switches.push_back(
        SwitchEvent{tau, k, l, x_tau_pre, draw.clock_value});
    append_node(rec, tau, x_tau_pre, l);

    x = x_tau_pre;
    k = l;
    t = tau;
  }

  if (rec.nodes() == 0) append_node(rec, 0.0, x, k);
  return rec;
}

EnsembleReport ensemble(const ModelSpec& model, std::span<const double> x0,
                        int k0, const IntegratorConfig& cfg,
                        std::size_t n_paths, const PathStatistic& stat,
                        unsigned threads) {
  if (n_paths < 1) throw ConfigError("ensemble: n_paths must be >= 1");
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = static_cast<unsigned>(
      std::min<std::size_t>(threads, n_paths));

  std::vector<Vec> values(n_paths);
  std::vector<char> truncated(n_paths, 0);
  std::exception_ptr first_error;
  std::mutex err_mutex;

  auto worker = [&](std::size_t lo, std::size_t hi) {
    try {
      Vec x0copy(x0.begin(), x0.end());
      for (std::size_t p = lo; p < hi; ++p) {
        PathRecord rec = simulate_hybrid(model, x0copy, k0, cfg, p);
        truncated[p] = (rec.termination == Termination::TruncatedAtRadius);
        values[p] = stat.eval(rec);
      }
    } catch (...) {
      std::lock_guard<std::mutex> g(err_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  if (threads <= 1) {
    worker(0, n_paths);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_paths + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(n_paths, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  EnsembleReport rep;
  rep.n_total = n_paths;
  rep.mean.assign(stat.size, 0.0);
  rep.se.assign(stat.size, 0.0);

  std::vector<KahanSum> sums(stat.size);
  for (std::size_t p = 0; p < n_paths; ++p) {
    if (truncated[p]) ++rep.truncated_count;
    if (truncated[p] && stat.truncation_invalidates) continue;
    ++rep.n_used;
    for (std::size_t c = 0; c < stat.size; ++c) sums[c].add(values[p][c]);
  }
  if (rep.n_used == 0) {
    throw AllPathsTruncated("ensemble: every path hit the truncation radius");
  }
  for (std::size_t c = 0; c < stat.size; ++c) {
    rep.mean[c] = sums[c].value() / static_cast<double>(rep.n_used);
  }
  if (rep.n_used >= 2) {
    std::vector<KahanSum> sq(stat.size);
    for (std::size_t p = 0; p < n_paths; ++p) {
      if (truncated[p] && stat.truncation_invalidates) continue;
      for (std::size_t c = 0; c < stat.size; ++c) {
        const double dv = values[p][c] - rep.mean[c];
        sq[c].add(dv * dv);
      }
    }
    for (std::size_t c = 0; c < stat.size; ++c) {
      rep.se[c] = std::sqrt(sq[c].value() /
                            static_cast<double>(rep.n_used - 1) /
                            static_cast<double>(rep.n_used));
    }
  }
  return rep;
}

EnsembleReport ensemble_scalar(const ModelSpec& model,
                               std::span<const double> x0, int k0,
                               const IntegratorConfig& cfg,
                               std::size_t n_paths,
                               const std::function<double(const PathRecord&)>& f,
                               bool truncation_invalidates, unsigned threads) {
  PathStatistic stat;
  stat.size = 1;
  stat.truncation_invalidates = truncation_invalidates;
  stat.eval = [&f](const PathRecord& rec) { return Vec{f(rec)}; };
  return ensemble(model, x0, k0, cfg, n_paths, stat, threads);
}

}  // namespace hybridsde
