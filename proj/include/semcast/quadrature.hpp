#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

namespace semcast {

namespace detail {

template <typename F>
double simpson_step(F&& f, double a, double m, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature with an absolute error target.
template <typename F>
double adaptive_simpson(F&& f, double a, double b, double abs_tol, int max_depth = 48) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, m, b, fa, fm, fb, whole, abs_tol, max_depth);
}

/// Trapezoid rule over tabulated samples (x strictly increasing).
inline double trapezoid(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y) {
  if (x.size() != y.size()) throw std::invalid_argument("trapezoid: size mismatch");
  if (x.size() < 2) throw std::invalid_argument("trapezoid: need at least 2 points");
  double acc = 0.0;
  for (Eigen::Index i = 1; i < x.size(); ++i) {
    acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  }
  return acc;
}

}  // namespace semcast
