#ifndef HYBRIDSDE_COMMON_HPP
#define HYBRIDSDE_COMMON_HPP

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace hybridsde {

using Vec = std::vector<double>;

/// Dense row-major matrix, small (coefficient matrices, truncated Q-matrices).
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double sq_dist(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

/// Kahan compensated accumulator.  Row sums and ensemble reductions must not
/// depend on summation order beyond 1e-12, so plain += is not enough for
/// large M or large path counts.
class KahanSum {
 public:
  void add(double v) {
    const double y = v - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

inline MeanSe mean_se(std::span<const double> xs) {
  MeanSe r;
  r.n = xs.size();
  if (r.n == 0) return r;
  KahanSum s;
  for (double v : xs) s.add(v);
  r.mean = s.value() / static_cast<double>(r.n);
  if (r.n < 2) return r;
  KahanSum s2;
  for (double v : xs) s2.add((v - r.mean) * (v - r.mean));
  const double var = s2.value() / static_cast<double>(r.n - 1);
  r.se = std::sqrt(var / static_cast<double>(r.n));
  return r;
}

/// Frobenius norm squared.
inline double frob2(const Mat& m) {
  double s = 0.0;
  for (double v : m.a) s += v * v;
  return s;
}

/// a = m * m^T
inline Mat mmT(const Mat& m) {
  Mat out(m.rows, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.rows; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < m.cols; ++k) s += m(i, k) * m(j, k);
      out(i, j) = s;
    }
  return out;
}

inline Vec mat_vec(const Mat& m, std::span<const double> x) {
  Vec out(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

/// Signed-real fractional powers: x^{1/3} = sign(x)|x|^{1/3}, even powers of
/// the cube root are nonnegative.
inline double cbrt_signed(double x) { return std::cbrt(x); }
inline double pow23(double x) { return std::cbrt(x * x); }
inline double pow43(double x) {
  const double c = std::cbrt(x);
  return c * c * c * c;
}

}  // namespace hybridsde

#endif
