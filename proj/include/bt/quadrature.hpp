#pragma once

#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>

namespace bt {

/// Thrown when adaptive quadrature cannot reach the requested tolerance
/// (typically a divergent integral). Never silently approximated.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename F>
double simpson(F&& f, double a, double fa, double b, double fb, double m, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive_simpson_rec(F&& f, double a, double fa, double b, double fb,
                            double m, double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(f, a, fa, m, fm, lm, flm);
  const double right = simpson(f, m, fm, b, fb, rm, frm);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  if (depth <= 0) {
    throw QuadratureError("adaptive Simpson did not converge on [" +
                          std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f on [a, b] to absolute tolerance abs_tol.
/// Throws QuadratureError when the recursion depth is exhausted.
template <std::invocable<double> F>
double adaptive_simpson(F&& f, double a, double b, double abs_tol, int max_depth = 52) {
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = detail::simpson(f, a, fa, b, fb, m, fm);
  return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, abs_tol, max_depth);
}

}  // namespace bt
