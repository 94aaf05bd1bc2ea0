#include "hybridsde/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>

#include "hybridsde/errors.hpp"
#include "hybridsde/quadrature.hpp"

namespace hybridsde {

CoupledRateTable build_coupled_rates(const ModelSpec& model,
                                     const CoupledState& s) {
  const QRow row_x = q_row(model, s.x, s.i);
  const QRow row_z = q_row(model, s.z, s.j);
  CoupledRateTable t;
  KahanSum total;
  for (int l = 1; l <= model.regime_cap; ++l) {
    const double qx = (l == s.i) ? 0.0 : row_x.rates[static_cast<std::size_t>(l)];
    const double qz = (l == s.j) ? 0.0 : row_z.rates[static_cast<std::size_t>(l)];
    CoupledRateTable::Entry e;
    e.l = l;
    e.together = std::min(qx, qz);
    e.first_only = std::max(0.0, qx - qz);
    e.second_only = std::max(0.0, qz - qx);
    if (e.together > 0.0 || e.first_only > 0.0 || e.second_only > 0.0) {
      t.entries.push_back(e);
      total.add(e.together);
      total.add(e.first_only);
      total.add(e.second_only);
    }
  }
  t.total = total.value();
  return t;
}

std::pair<int, int> couple_step_switch(const ModelSpec& model,
                                       const CoupledState& s, double dt,
                                       RngStream& rng) {
  const CoupledRateTable t = build_coupled_rates(model, s);
  if (t.total <= 0.0) return {s.i, s.j};
  const double p_fire = -std::expm1(-t.total * dt);
  if (rng.u01() >= p_fire) return {s.i, s.j};
  double r = rng.u01() * t.total;
  for (const auto& e : t.entries) {
    if (r < e.together) return {e.l, e.l};
    r -= e.together;
    if (r < e.first_only) return {e.l, s.j};
    r -= e.first_only;
    if (r < e.second_only) return {s.i, e.l};
    r -= e.second_only;
  }
  // round-off fell past the last cell; attribute it there
  const auto& e = t.entries.back();
  if (e.second_only > 0.0) return {s.i, e.l};
  if (e.first_only > 0.0) return {e.l, s.j};
  return {e.l, e.l};
}

namespace {

bool same_point(std::span<const double> a, std::span<const double> b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

void check_finite(std::span<const double> x) {
  for (double c : x) {
    if (!std::isfinite(c)) {
      throw NonFiniteState("coupled state coordinate became non-finite");
    }
  }
}

/// One synchronous Euler step of a single component with supplied shared
/// noise: normal vector zvec and the jump marks for this step.
void em_step(const ModelSpec& model, Vec& x, int k, double dt,
             std::span<const double> zvec, const std::vector<Vec>& marks) {
  const int d = model.dim;
  Vec drift = model.drift(x, k);
  if (model.levy.has_jumps()) {
    const Vec comp = model.jump_compensator(x, k);
    for (int i = 0; i < d; ++i) drift[static_cast<std::size_t>(i)] -= comp[static_cast<std::size_t>(i)];
  }
  const Vec dw = mat_vec(model.diffusion(x, k), zvec);
  const double sq_dt = std::sqrt(dt);
  Vec next(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    next[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] +
                                        drift[static_cast<std::size_t>(i)] * dt +
                                        sq_dt * dw[static_cast<std::size_t>(i)];
  }
  for (const Vec& u : marks) {
    const Vec c = model.jump_coeff(x, k, u);
    for (int i = 0; i < d; ++i) next[static_cast<std::size_t>(i)] += c[static_cast<std::size_t>(i)];
  }
  check_finite(next);
  x = std::move(next);
}

}  // namespace

CouplingRecord couple_paths(const ModelSpec& model, std::span<const double> x0,
                            std::span<const double> z0, int k0,
                            const CouplingConfig& cfg, std::uint64_t path_id) {
  cfg.base.validate(model);
  const int d = model.dim;
  RngStream rng_w = RngStream::derive(cfg.base.master_seed, path_id, StreamRole::Brownian);
  RngStream rng_n = RngStream::derive(cfg.base.master_seed, path_id, StreamRole::Jump);
  RngStream rng_c = RngStream::derive(cfg.base.master_seed, path_id, StreamRole::Clock);

  CouplingRecord rec;
  rec.dim = d;
  rec.master_seed = cfg.base.master_seed;
  rec.path_id = path_id;

  CoupledState s{Vec(x0.begin(), x0.end()), k0, Vec(z0.begin(), z0.end()), k0};
  double t = 0.0;
  const double T = cfg.base.horizon;
  const double lambda =
      model.levy.has_jumps() ? model.levy.cp_intensity() : 0.0;
  bool glued = same_point(s.x, s.z) && s.i == s.j;
  if (glued) rec.coalescence_time = 0.0;

  auto record_node = [&](double time) {
    rec.times.push_back(time);
    rec.x_states.insert(rec.x_states.end(), s.x.begin(), s.x.end());
    rec.z_states.insert(rec.z_states.end(), s.z.begin(), s.z.end());
    rec.i_regimes.push_back(s.i);
    rec.j_regimes.push_back(s.j);
    const double dist = std::sqrt(sq_dist(s.x, s.z));
    if (!std::isfinite(rec.zeta) && s.i != s.j) rec.zeta = time;
    if (!std::isfinite(rec.coalescence_time) && glued) {
      rec.coalescence_time = time;
    }
    if (!std::isfinite(rec.delta0_exit_time) && dist > cfg.delta0) {
      rec.delta0_exit_time = time;
    }
    if (!std::isfinite(rec.radius_exit_time) &&
        (norm2(s.x) > cfg.ball_radius || norm2(s.z) > cfg.ball_radius)) {
      rec.radius_exit_time = time;
    }
  };

  record_node(0.0);
  while (t < T - 1e-15) {
    const double dt = std::min(cfg.base.dt, T - t);

    Vec zvec(static_cast<std::size_t>(d));
    for (auto& v : zvec) v = rng_w.normal();
    std::vector<Vec> marks;
    if (lambda > 0.0) {
      const std::uint64_t n_jumps = rng_n.poisson(lambda * dt);
      marks.reserve(n_jumps);
      for (std::uint64_t j = 0; j < n_jumps; ++j) {
        marks.push_back(model.levy.sample_mark(rng_n));
      }
    }

    if (glued) {
      em_step(model, s.x, s.i, dt, zvec, marks);
      s.z = s.x;
      const auto [ni, nj] = couple_step_switch(model, s, dt, rng_c);
      s.i = ni;
      s.j = nj;  // on the diagonal only the together family fires
    } else {
      Vec x_next = s.x;
      em_step(model, x_next, s.i, dt, zvec, marks);
      em_step(model, s.z, s.j, dt, zvec, marks);
      const auto [ni, nj] = couple_step_switch(model, s, dt, rng_c);
      s.x = std::move(x_next);
      s.i = ni;
      s.j = nj;
      glued = same_point(s.x, s.z) && s.i == s.j;
    }

    t += dt;
    record_node(t);

    if (norm2(s.x) > cfg.base.truncation_radius ||
        norm2(s.z) > cfg.base.truncation_radius) {
      rec.termination = Termination::TruncatedAtRadius;
      break;
    }
  }

  rec.checkpoint_times = {0.0, 0.25 * T, 0.5 * T, 0.75 * T, T};
  for (double ct : rec.checkpoint_times) {
    const auto it =
        std::upper_bound(rec.times.begin(), rec.times.end(), ct + 1e-12);
    std::size_t idx = static_cast<std::size_t>(it - rec.times.begin());
    idx = (idx == 0) ? 0 : idx - 1;
    rec.f_values.push_back(metric_f(rec.state_at(idx)));
  }
  return rec;
}

WfEstimate estimate_Wf(const ModelSpec& model, double t,
                       std::span<const double> x, std::span<const double> z,
                       int k, const CouplingConfig& cfg, std::size_t n_paths,
                       unsigned threads) {
  if (n_paths < 1) throw ConfigError("estimate_Wf: n_paths must be >= 1");
  CouplingConfig run = cfg;
  run.base.horizon = t > 0.0 ? t : cfg.base.dt;

  struct PairOut {
    double f = 0.0;
    char switched = 0;
    char d0_exit = 0;
    char r_exit = 0;
    char truncated = 0;
  };
  std::vector<PairOut> out(n_paths);
  std::exception_ptr first_error;
  std::mutex err_mutex;

  auto worker = [&](std::size_t lo, std::size_t hi) {
    try {
      for (std::size_t p = lo; p < hi; ++p) {
        const CouplingRecord rec = couple_paths(model, x, z, k, run, p);
        const std::size_t last = rec.nodes() - 1;
        out[p].f = (t > 0.0) ? metric_f(rec.state_at(last))
                             : metric_f(rec.state_at(0));
        out[p].switched = rec.zeta <= t;
        out[p].d0_exit = rec.delta0_exit_time <= t;
        out[p].r_exit = rec.radius_exit_time <= t;
        out[p].truncated = rec.termination == Termination::TruncatedAtRadius;
      }
    } catch (...) {
      std::lock_guard<std::mutex> g(err_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_paths));
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

  WfEstimate est;
  est.t = t;
  est.r0 = std::sqrt(sq_dist(x, z));
  KahanSum sum, sw, d0, rr;
  std::size_t used = 0;
  for (const auto& o : out) {
    if (o.truncated) {
      ++est.truncated_count;
      continue;
    }
    ++used;
    sum.add(o.f);
    sw.add(o.switched);
    d0.add(o.d0_exit);
    rr.add(o.r_exit);
  }
  if (used == 0) {
    throw AllPathsTruncated("estimate_Wf: every coupled pair hit the radius");
  }
  est.n_used = used;
  const double n = static_cast<double>(used);
  est.mean = sum.value() / n;
  const double p_switch = sw.value() / n;
  est.switch_loss = 2.0 * p_switch;
  est.delta0_exit_frac = d0.value() / n;
  est.radius_exit_frac = rr.value() / n;
  if (used >= 2) {
    KahanSum sq;
    for (const auto& o : out) {
      if (o.truncated) continue;
      const double dv = o.f - est.mean;
      sq.add(dv * dv);
    }
    est.se = std::sqrt(sq.value() / (n - 1.0) / n);
    est.switch_loss_se =
        2.0 * std::sqrt(std::max(0.0, p_switch * (1.0 - p_switch)) / n);
  }
  return est;
}

double bihari_bound(double r0, double t, double kappa_R,
                    const ModulusSpec& mod) {
  const double F0 = metric_F(std::max(0.0, r0));
  if (F0 <= 0.0) return 0.0;
  const double lo = 1e-14;

  auto G = [&](double r) {
    // G(r) = int_1^r ds/rho(s); negative below 1.  The substitution s = e^u
    // tames the near-zero blow-up of 1/rho (the range spans many decades).
    if (r == 1.0) return 0.0;
    const double a = std::log(std::min(r, 1.0));
    const double b = std::log(std::max(r, 1.0));
    const double mag = integrate(
        [&](double u) {
          const double s = std::exp(u);
          return s / mod.rho(s);
        },
        a, b, 1e-10);
    return (r < 1.0) ? -mag : mag;
  };

  const double target = G(F0) + 2.0 * kappa_R * t;
  if (target >= 0.0) return 1.0;        // G(1) = 0: past the range cap
  if (G(lo) >= target) return lo;       // below numerical resolution
  const double r = bisect([&](double s) { return G(s) - target; }, lo, 1.0);
  return std::min(r, 1.0);
}

}  // namespace hybridsde
