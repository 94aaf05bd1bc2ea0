#include "hybridsde/levy.hpp"

#include <algorithm>
#include <cmath>

#include "hybridsde/errors.hpp"
#include "hybridsde/quadrature.hpp"

namespace hybridsde {

double sphere_area(int dim) {
  return 2.0 * std::pow(M_PI, 0.5 * dim) / std::tgamma(0.5 * dim);
}

LevyMeasureSpec::LevyMeasureSpec(int dim, double r_max, double eps,
                                 std::function<double(double)> radial_density)
    : dim_(dim), r_max_(r_max), eps_(eps),
      radial_density_(std::move(radial_density)) {
  if (radial_density_) build_tables();
}

double LevyMeasureSpec::radial_integral(const std::function<double(double)>& g,
                                        double a, double b,
                                        double abs_tol) const {
  if (!radial_density_ || b <= a) return 0.0;
  const double area = sphere_area(dim_);
  auto integrand = [&](double r) {
    return g(r) * radial_density_(r) * std::pow(r, dim_ - 1);
  };
  if (a <= 0.0) return area * integrate_to_zero(integrand, b, abs_tol);
  return area * integrate(integrand, a, b, abs_tol);
}

void LevyMeasureSpec::build_tables() {
  auto one = [](double) { return 1.0; };
  auto id = [](double r) { return r; };
  auto sq = [](double r) { return r * r; };
  lambda_eps_ = radial_integral(one, eps_, r_max_);
  if (!std::isfinite(lambda_eps_)) {
    throw DivergentMass("Levy mass above the cutoff is not finite");
  }
  try {
    second_moment_ = radial_integral(sq, 0.0, r_max_);
  } catch (const QuadratureFailure&) {
    // the dyadic refinement toward 0 only fails to settle when the mass
    // it chases keeps growing, i.e. the integral diverges at the origin
    throw DivergentMass("Levy second moment is not finite");
  }
  if (!std::isfinite(second_moment_)) {
    throw DivergentMass("Levy second moment is not finite");
  }
  first_moment_retained_ = radial_integral(id, eps_, r_max_);

  // Inverse-CDF table for the mark radius on (eps, r_max], geometric grid.
  if (lambda_eps_ > 0.0) {
    const int n = 512;
    cdf_radii_.resize(n + 1);
    cdf_mass_.resize(n + 1);
    const double lo = std::max(eps_, 1e-12 * r_max_);
    const double ratio = std::pow(r_max_ / lo, 1.0 / n);
    cdf_radii_[0] = lo;
    cdf_mass_[0] = 0.0;
    for (int i = 1; i <= n; ++i) {
      cdf_radii_[i] = (i == n) ? r_max_ : cdf_radii_[i - 1] * ratio;
      cdf_mass_[i] = cdf_mass_[i - 1] +
                     radial_integral(one, cdf_radii_[i - 1], cdf_radii_[i],
                                     1e-12 * std::max(1.0, lambda_eps_));
    }
  }
}

LevyMeasureSpec LevyMeasureSpec::with_cutoff(double eps) const {
  if (!radial_density_) return LevyMeasureSpec{};
  return LevyMeasureSpec(dim_, r_max_, eps, radial_density_);
}

Vec LevyMeasureSpec::sample_mark(RngStream& rng) const {
  const double target = rng.u01() * cdf_mass_.back();
  const auto it = std::lower_bound(cdf_mass_.begin(), cdf_mass_.end(), target);
  std::size_t i = static_cast<std::size_t>(it - cdf_mass_.begin());
  if (i == 0) i = 1;
  const double m0 = cdf_mass_[i - 1];
  const double m1 = cdf_mass_[i];
  const double w = (m1 > m0) ? (target - m0) / (m1 - m0) : 0.5;
  const double r = cdf_radii_[i - 1] + w * (cdf_radii_[i] - cdf_radii_[i - 1]);

  Vec u(dim_, 0.0);
  if (dim_ == 1) {
    u[0] = (rng.u01() < 0.5) ? -r : r;
    return u;
  }
  double nrm = 0.0;
  do {
    for (auto& c : u) c = rng.normal();
    nrm = norm2(u);
  } while (nrm == 0.0);
  for (auto& c : u) c *= r / nrm;
  return u;
}

}  // namespace hybridsde
