#ifndef HYBRIDSDE_MODEL_HPP
#define HYBRIDSDE_MODEL_HPP

#include <functional>
#include <string>

#include "hybridsde/common.hpp"
#include "hybridsde/levy.hpp"

namespace hybridsde {

/// A point (x, k) in R^d x {1..M}.
struct HybridState {
  Vec x;
  int k = 1;
};

/// Full definition of one hybrid system.  Regime space {1,2,...} is truncated
/// to {1..regime_cap}; switching mass targeting l > regime_cap is dropped
/// (optionally lumped onto regime_cap when a family supports it).
///
/// All evaluators must be pure and reentrant; a ModelSpec is immutable after
/// construction and shared across path workers.
struct ModelSpec {
  std::string name;
  int dim = 1;
  int regime_cap = 1;

  std::function<Vec(std::span<const double>, int)> drift;
  std::function<Mat(std::span<const double>, int)> diffusion;
  std::function<Vec(std::span<const double>, int, std::span<const double>)> jump_coeff;
  /// Exact drift correction int_{|u|>eps} c(x,k,u) nu(du) for the retained
  /// jump compensation.  Required whenever the Levy measure is nonzero.
  std::function<Vec(std::span<const double>, int)> jump_compensator;

  LevyMeasureSpec levy;

  /// q_provider(x, k, l) for l != k, both <= regime_cap.  The diagonal is
  /// never queried; q_k(x) is assembled as the off-diagonal row sum.
  std::function<double(std::span<const double>, int, int)> q_provider;

  /// zeta: [0,inf) -> [1,inf), nondecreasing C^1.
  std::function<double(double)> growth_modulus;
  /// Nondecreasing f: S -> R_+ with f(m) -> inf.
  std::function<double(int)> regime_weight;

  /// Optional per-regime majorant sup_x q_k(x), enabling thinning mode.
  std::function<double(int)> switch_majorant;
};

struct QRow {
  /// rates[l] = q_kl(x) for l in 1..M (1-based; rates[k] = 0).
  Vec rates;
  double total = 0.0;
};

/// Off-diagonal row of Q(x) at (x, k) with compensated row sum.
/// Throws NonFiniteRate / NegativeRate on bad evaluator output.
QRow q_row(const ModelSpec& model, std::span<const double> x, int k);

struct LevyDecomposition {
  double cp_intensity = 0.0;
  LevyMeasureSpec retained;
  std::string note;
};

/// Splits nu at |u| = eps: large jumps as compound Poisson at rate lambda_eps,
/// small jumps dropped with the retained-part compensation applied exactly.
LevyDecomposition levy_decompose(const LevyMeasureSpec& levy, double eps);

/// The d = 3 reference model: b_j = -x_j^{1/3} - k x_j^3,
/// c_j = gamma x_j^{2/3} |u|, nu(du) = du/|u|^{3+alpha} on {0 < |u| < 1},
/// q_kl(x) = (k/2^l) |x|^2/(1+|x|^2).  gamma is calibrated by quadrature so
/// gamma^2 int |u|^2 nu(du) = 1/2.
ModelSpec example1_model(double alpha, int M, double eps = 0.05,
                         bool reflect_tail_to_cap = false);

/// example1 switching rates with zero drift/diffusion/jump coefficients.
ModelSpec example1_frozen_model(int M, int dim = 3);

/// Everything zero: absorbing regimes, motionless paths.
ModelSpec zero_model(int dim, int M);

/// Frozen-x toy with state-independent rates q_kl = kappa * l * 3^{-l}
/// (l != k); satisfies the geometric-decay rate bound with constant kappa.
ModelSpec geometric_rates_model(double kappa, int M, int dim = 1);

/// sum_{l > M} kappa * l * 3^{-l}: the switching mass dropped by truncation.
double truncation_tail_mass(double kappa, int M);

/// Built-in parametric families from a JSON document; unknown fields rejected.
/// Families: "example1" {alpha, M, eps, reflect_tail?}, "example1_frozen"
/// {M, dim?}, "zero" {dim, M}, "geometric_rates" {kappa, M, dim?}.
ModelSpec model_from_json(const std::string& json_text);

}  // namespace hybridsde

#endif
