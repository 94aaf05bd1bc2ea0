#ifndef HYBRIDSDE_COUPLING_HPP
#define HYBRIDSDE_COUPLING_HPP

#include <limits>

#include "hybridsde/diagnostics.hpp"
#include "hybridsde/integrator.hpp"
#include "hybridsde/model.hpp"

namespace hybridsde {

/// F(r) = r / (1 + r): bounded concave distance profile.
inline double metric_F(double r) { return r / (1.0 + r); }

struct CoupledState {
  Vec x;
  int i = 1;
  Vec z;
  int j = 1;
};

/// f(x,i,z,j) = F(|x-z|) + 1{i != j}: the bounded metric the Wasserstein
/// diagnostics run against.
inline double metric_f(const CoupledState& s) {
  return metric_F(std::sqrt(sq_dist(s.x, s.z))) + (s.i != s.j ? 1.0 : 0.0);
}

/// Basic-coupling rate table at a frozen coupled state: for each target l,
/// both regimes move together at rate q_il(x) ^ q_jl(z), only the first at
/// (q_il(x) - q_jl(z))^+, only the second at the mirror positive part.  Each
/// marginal sums back to its own row.
struct CoupledRateTable {
  struct Entry {
    int l = 0;
    double together = 0.0;
    double first_only = 0.0;
    double second_only = 0.0;
  };
  std::vector<Entry> entries;
  double total = 0.0;
};

CoupledRateTable build_coupled_rates(const ModelSpec& model,
                                     const CoupledState& s);

/// At most one switching event on [t, t+dt) with the rates frozen at the step
/// start: fire with probability 1 - exp(-total dt), pick the (l, family) cell
/// proportionally.  Returns the next (i, j).
std::pair<int, int> couple_step_switch(const ModelSpec& model,
                                       const CoupledState& s, double dt,
                                       RngStream& rng);

struct CouplingConfig {
  IntegratorConfig base;
  /// Exit radii for the localization flags; +inf disables them.
  double delta0 = std::numeric_limits<double>::infinity();
  double ball_radius = std::numeric_limits<double>::infinity();
};

struct CouplingRecord {
  int dim = 1;
  std::vector<double> times;
  std::vector<double> x_states;   // flat
  std::vector<double> z_states;   // flat
  std::vector<int> i_regimes;
  std::vector<int> j_regimes;
  /// First time the regime components differ (inf if never).
  double zeta = std::numeric_limits<double>::infinity();
  /// First time all four components agree exactly (inf if never).
  double coalescence_time = std::numeric_limits<double>::infinity();
  /// First time |x - z| > delta0 / either component leaves the ball.
  double delta0_exit_time = std::numeric_limits<double>::infinity();
  double radius_exit_time = std::numeric_limits<double>::infinity();
  Vec checkpoint_times;
  Vec f_values;                   // metric_f at the checkpoints
  Termination termination = Termination::Completed;
  std::uint64_t master_seed = 0;
  std::uint64_t path_id = 0;

  std::size_t nodes() const { return times.size(); }
  std::span<const double> x_at(std::size_t n) const {
    return std::span<const double>(x_states)
        .subspan(n * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
  }
  std::span<const double> z_at(std::size_t n) const {
    return std::span<const double>(z_states)
        .subspan(n * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
  }
  CoupledState state_at(std::size_t n) const {
    const auto xs = x_at(n);
    const auto zs = z_at(n);
    return CoupledState{Vec(xs.begin(), xs.end()), i_regimes[n],
                        Vec(zs.begin(), zs.end()), j_regimes[n]};
  }
};

/// One coupled trajectory: both x-components advance with the SAME Brownian
/// increments and the SAME Poisson events/marks (synchronous coupling), the
/// regimes by the basic coupling above.  After exact coalescence the pair is
/// glued permanently.
CouplingRecord couple_paths(const ModelSpec& model, std::span<const double> x0,
                            std::span<const double> z0, int k0,
                            const CouplingConfig& cfg,
                            std::uint64_t path_id = 0);

struct WfEstimate {
  double t = 0.0;
  double r0 = 0.0;
  double mean = 0.0;
  double se = 0.0;
  /// 2 P(zeta <= t): the mass the regime components may have lost.
  double switch_loss = 0.0;
  double switch_loss_se = 0.0;
  double delta0_exit_frac = 0.0;
  double radius_exit_frac = 0.0;
  std::size_t n_used = 0;
  std::size_t truncated_count = 0;
};

/// Monte Carlo mean of metric_f at time t over coupled pairs started at
/// (x, k) and (z, k): an upper-bound estimator of W_f between the two
/// transition laws.
WfEstimate estimate_Wf(const ModelSpec& model, double t,
                       std::span<const double> x, std::span<const double> z,
                       int k, const CouplingConfig& cfg, std::size_t n_paths,
                       unsigned threads = 0);

/// G^{-1}(G(F(r0)) + 2 kappa_R t) with G(r) = int_1^r ds/rho(s), capped at 1
/// (the range of F); quadrature + bisection.
double bihari_bound(double r0, double t, double kappa_R,
                    const ModulusSpec& mod);

}  // namespace hybridsde

#endif
