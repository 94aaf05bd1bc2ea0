#include "hybridsde/quadrature.hpp"

#include <cmath>

#include "hybridsde/errors.hpp"

namespace hybridsde {

namespace {

double simpson(double fa, double fm, double fb, double a, double b) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double b,
             double fa, double fm, double fb, double whole, double tol,
             int depth) {
  if (depth <= 0) {
    throw QuadratureFailure("adaptive Simpson: depth budget exhausted");
  }
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(fa, flm, fm, a, m);
  const double right = simpson(fm, frm, fb, m, b);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, int max_depth) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = simpson(fa, fm, fb, a, b);
  return adapt(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

double integrate_to_zero(const std::function<double(double)>& f, double b,
                         double abs_tol) {
  if (b <= 0.0) return 0.0;
  double total = 0.0;
  double hi = b;
  for (int j = 0; j < 200; ++j) {
    const double lo = hi * 0.5;
    const double piece = integrate(f, lo, hi, abs_tol * 0.25);
    total += piece;
    if (lo < 1e-300 || (j > 4 && std::abs(piece) < abs_tol * 0.1)) {
      return total;
    }
    hi = lo;
  }
  throw QuadratureFailure("integrate_to_zero: did not converge near 0");
}

double bisect(const std::function<double(double)>& g, double lo, double hi,
              double tol, int max_iter) {
  double glo = g(lo);
  double ghi = g(hi);
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  if ((glo > 0.0) == (ghi > 0.0)) {
    throw InversionBracketFailure("bisect: endpoints do not bracket a root");
  }
  for (int i = 0; i < max_iter; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (std::abs(gm) == 0.0 || 0.5 * (hi - lo) < tol) return mid;
    if ((gm > 0.0) == (ghi > 0.0)) {
      hi = mid;
      ghi = gm;
    } else {
      lo = mid;
      glo = gm;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace hybridsde
