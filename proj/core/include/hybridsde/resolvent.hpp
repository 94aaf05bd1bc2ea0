#ifndef HYBRIDSDE_RESOLVENT_HPP
#define HYBRIDSDE_RESOLVENT_HPP

#include <limits>

#include "hybridsde/integrator.hpp"
#include "hybridsde/model.hpp"

namespace hybridsde {

/// Bounded target function on R^d x S.
using ScalarField = std::function<double(std::span<const double>, int)>;

enum class KillVariant { Weight, HardKill };

/// Frozen-regime trajectory with its survival record.  Weight variant: the
/// multiplicative weight exp(-int_0^t q_k(X(s)) ds) per grid node.  Hard-kill
/// variant: one switching clock; weights are 1 before the kill time and 0
/// after (the cemetery).
struct KilledSample {
  PathRecord path;
  Vec weights;
  double kill_time = std::numeric_limits<double>::infinity();

  bool killed_by(double t) const { return kill_time <= t; }
};

KilledSample simulate_killed(const ModelSpec& model, std::span<const double> x,
                             int k, double t, const IntegratorConfig& cfg,
                             std::uint64_t path_id = 0,
                             KillVariant variant = KillVariant::Weight);

struct ResolventEstimate {
  double alpha = 0.0;
  double value = 0.0;
  double se = 0.0;
  double t_cut = 0.0;
  /// |f|_sup e^{-alpha T_cut} / alpha: what the horizon truncation can hide.
  double tail_bound = 0.0;
  std::size_t n_used = 0;
  std::size_t truncated_count = 0;
};

/// Horizon for resolvent quadrature: e^{-alpha t} tails are analytic, so a
/// fixed cut with an attached bound replaces adaptive stopping.
inline double resolvent_horizon(double alpha) {
  return std::max(10.0 / alpha, 20.0);
}

/// G_alpha f(x,k) = E int_0^inf e^{-alpha t} f(X(t), Lambda(t)) dt, estimated
/// by switch-aware trapezoidal quadrature along hybrid paths up to the cut.
/// Each grid interval uses the regime that is active on it, so the integrand's
/// jump at a switch lands exactly on the node.
ResolventEstimate resolvent_G(const ModelSpec& model, const ScalarField& f,
                              double f_sup, double alpha,
                              std::span<const double> x, int k,
                              const IntegratorConfig& cfg, std::size_t n_paths,
                              unsigned threads = 0);

/// Resolvent of the killed (single-regime) process: per sample the integral
/// of e^{-alpha t} w(t) f(X(t), k).
ResolventEstimate killed_resolvent(const ModelSpec& model,
                                   const ScalarField& f, double f_sup,
                                   double alpha, std::span<const double> x,
                                   int k, const IntegratorConfig& cfg,
                                   std::size_t n_paths,
                                   KillVariant variant = KillVariant::Weight,
                                   unsigned threads = 0);

/// i-th series term by the switch-count representation: the part of the
/// resolvent integral accumulated while the path has seen exactly i switches.
ResolventEstimate series_psi(const ModelSpec& model, const ScalarField& f,
                             double f_sup, double alpha,
                             std::span<const double> x, int k,
                             const IntegratorConfig& cfg, std::size_t n_paths,
                             int i, unsigned threads = 0);

/// alpha_1 = (3 kappa + 1) / 4: above it the series remainder contracts.
inline double alpha_threshold(double kappa) { return (3.0 * kappa + 1.0) / 4.0; }

struct SeriesReport {
  double alpha = 0.0;
  double kappa = 0.0;
  int m = 0;
  /// |G_alpha f - sum_{i<=m} psi_i|, estimated per path from one ensemble so
  /// the difference is the (correlated) high-switch-count remainder.
  double D = 0.0;
  double se = 0.0;
  /// (3 kappa / 4 alpha)^{m+1} |f|_sup / alpha.
  double B = 0.0;
  double tail = 0.0;
  bool pass = false;
  /// alpha below alpha_threshold(kappa): reported, not fatal.
  bool threshold_warning = false;
  Vec psi_means;
  Vec psi_ses;
  double g_mean = 0.0;
  double g_se = 0.0;
  std::size_t n_used = 0;
  std::size_t truncated_count = 0;
};

SeriesReport verify_series(const ModelSpec& model, const ScalarField& f,
                           double f_sup, double alpha, double kappa,
                           std::span<const double> x, int k, int m,
                           const IntegratorConfig& cfg, std::size_t n_paths,
                           unsigned threads = 0);

}  // namespace hybridsde

#endif
