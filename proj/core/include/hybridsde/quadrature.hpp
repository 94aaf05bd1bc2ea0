#ifndef HYBRIDSDE_QUADRATURE_HPP
#define HYBRIDSDE_QUADRATURE_HPP

#include <functional>

namespace hybridsde {

/// Adaptive Simpson on [a, b] to absolute tolerance.  Throws QuadratureFailure
/// if the recursion depth budget is exhausted before the tolerance is met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10, int max_depth = 60);

/// Integral over (0, b] tolerating an integrable endpoint singularity at 0:
/// dyadic splitting toward the origin, adaptive Simpson on each piece.
double integrate_to_zero(const std::function<double(double)>& f, double b,
                         double abs_tol = 1e-10);

/// Bisection root of a monotone function g on [lo, hi] with g(lo), g(hi)
/// bracketing zero.  Throws InversionBracketFailure if the bracket is bad.
double bisect(const std::function<double(double)>& g, double lo, double hi,
              double tol = 1e-12, int max_iter = 200);

}  // namespace hybridsde

#endif
