#ifndef HYBRIDSDE_DIAGNOSTICS_HPP
#define HYBRIDSDE_DIAGNOSTICS_HPP

#include <functional>
#include <string>
#include <vector>

#include "hybridsde/integrator.hpp"
#include "hybridsde/model.hpp"

namespace hybridsde {

/// Phi(x) = exp{ int_0^{|x|^2} dr / (r zeta(r) + 1) }, adaptive quadrature to
/// 1e-10 absolute.
double phi(std::span<const double> x, const std::function<double(double)>& zeta);

/// V(x, k) = 1 + Phi(x) + f(k).
double lyapunov_V(std::span<const double> x, int k, const ModelSpec& model);

/// Bounded test function on R^d x S with two derivatives in x.  Missing
/// gradient/hessian evaluators fall back to central differences (step 1e-5).
struct TestFunction {
  std::function<double(std::span<const double>, int)> value;
  std::function<Vec(std::span<const double>, int)> gradient;    // optional
  std::function<Mat(std::span<const double>, int)> hessian;     // optional
  double sup_norm = 1.0;
};

Vec test_fn_gradient(const TestFunction& f, std::span<const double> x, int k);
Mat test_fn_hessian(const TestFunction& f, std::span<const double> x, int k);

struct GeneratorValue {
  double value = 0.0;
  /// Second-order Taylor bound on the dropped below-cutoff jump contribution.
  double jump_tail_bound = 0.0;
};

/// A f(x,k) = L_k f + Q(x) f: diffusion/drift terms, the compensated jump
/// integral by radial quadrature (direction-averaged over the coordinate
/// axes), and the finite regime sum.
GeneratorValue apply_generator(const ModelSpec& model, const TestFunction& f,
                               std::span<const double> x, int k);

/// Nondecreasing concave modulus with rho(0) = 0.  The log families are only
/// monotone near zero; above small_cutoff they continue linearly.
struct ModulusSpec {
  std::string name;
  std::function<double(double)> rho;
  double small_cutoff = 0.0;

  static ModulusSpec identity();   // rho(r) = r
  static ModulusSpec r_log();      // rho(r) = r log(1/r) near 0
  static ModulusSpec r_loglog();   // rho(r) = r log(log(1/r)) near 0

  /// Midpoint concavity + positivity on (0, delta0], grid check.
  bool check_shape(double delta0, int n_grid = 256) const;
};

struct CheckReport {
  std::string assumption_id;
  std::size_t n_samples = 0;
  double fitted_constant = 0.0;
  Vec witness_x;
  Vec witness_y;        // second point of the worst pair, when applicable
  int witness_k = 0;
  bool violated = false;  // structural violation (e.g. unbounded in l)
  bool has_user_constant = false;
  double user_constant = 0.0;
  bool pass = true;       // under the user constant, when given
  std::string note;
};

/// Where the sampled point clouds come from.  Coordinates are centered
/// Student-t(3) scaled by R/3 (to probe tails); pairs perturb base points at
/// log-spaced radii delta0, delta0/4, delta0/16, ...
struct SamplePlan {
  std::size_t n_points = 10000;
  double R = 5.0;
  double delta0 = 1.0;
  int n_pair_radii = 5;
  std::vector<int> regimes = {1, 2, 3, 4, 5};
  double holder_delta = 1.0;  // candidate Hoelder exponent
  std::uint64_t seed = 1234;
};

/// Growth, rate-linearity, switching-moment, and Hoelder inequalities of the
/// first existence assumption; one report per inequality, constants fitted as
/// the exact max over the sample.
std::vector<CheckReport> check_assumption_2_1(const ModelSpec& model,
                                              const SamplePlan& plan);

/// Near-diagonal path conditions (dimension-dependent branch) and the
/// coupling/Feller conditions; fitted kappa_R per inequality.
std::vector<CheckReport> check_assumption_2_2_and_3_2(const ModelSpec& model,
                                                      const ModulusSpec& mod,
                                                      double R, double delta0,
                                                      const SamplePlan& plan);

/// Uniform rate bound, geometric rate decay (with divergence flag), and the
/// minimum Rayleigh quotient of a = sigma sigma^T.
std::vector<CheckReport> check_assumption_4_3_and_ellipticity(
    const ModelSpec& model, double R, const SamplePlan& plan);

struct TrendReport {
  Vec checkpoints;
  Vec means;
  Vec ses;
  std::size_t n_paths = 0;
  std::size_t truncated_count = 0;
  bool pass = false;
};

/// Monte Carlo means of exp(-2Ht) V(X(t), Lambda(t)) at five checkpoints;
/// passes when each successive mean is <= previous + 3 combined SE.
TrendReport supermartingale_test(const ModelSpec& model,
                                 std::span<const double> x0, int k0, double H,
                                 const IntegratorConfig& cfg,
                                 std::size_t n_paths, unsigned threads = 0);

}  // namespace hybridsde

#endif
