#ifndef HYBRIDSDE_LEVY_HPP
#define HYBRIDSDE_LEVY_HPP

#include <functional>
#include <vector>

#include "hybridsde/common.hpp"
#include "hybridsde/rng.hpp"

namespace hybridsde {

/// Surface area of the unit sphere in R^d (2 for d=1, 2*pi, 4*pi, ...).
double sphere_area(int dim);

/// Levy measure with a radial density: nu(du) = rho(|u|) du on
/// {u in R^d : 0 < |u| < r_max}.  Marks above the small-jump cutoff eps are
/// simulated as compound Poisson; mass below eps is dropped and the
/// compensation of the retained jumps is applied exactly as a drift
/// correction (bias is of the order of the dropped small-jump variance).
class LevyMeasureSpec {
 public:
  /// Zero measure (no jumps).
  LevyMeasureSpec() = default;

  LevyMeasureSpec(int dim, double r_max, double eps,
                  std::function<double(double)> radial_density);

  bool has_jumps() const { return static_cast<bool>(radial_density_); }
  int dim() const { return dim_; }
  double r_max() const { return r_max_; }
  double eps() const { return eps_; }

  /// lambda_eps = total mass of {|u| > eps}.
  double cp_intensity() const { return lambda_eps_; }
  /// int_U |u|^2 nu(du) over the full support.
  double second_moment() const { return second_moment_; }
  /// int_{|u|>eps} |u| nu(du).
  double first_moment_retained() const { return first_moment_retained_; }

  /// S_{d-1} * int_a^b g(r) rho(r) r^{d-1} dr by adaptive quadrature.
  double radial_integral(const std::function<double(double)>& g, double a,
                         double b, double abs_tol = 1e-10) const;

  /// Same spec re-cut at a different small-jump cutoff.
  LevyMeasureSpec with_cutoff(double eps) const;

  /// One mark from the normalized restriction of nu to {eps < |u| <= r_max}:
  /// radius by tabulated inverse CDF, direction uniform on the sphere.
  Vec sample_mark(RngStream& rng) const;

 private:
  void build_tables();

  int dim_ = 0;
  double r_max_ = 0.0;
  double eps_ = 0.0;
  std::function<double(double)> radial_density_;
  double lambda_eps_ = 0.0;
  double second_moment_ = 0.0;
  double first_moment_retained_ = 0.0;
  std::vector<double> cdf_radii_;
  std::vector<double> cdf_mass_;
};

}  // namespace hybridsde

#endif
