#ifndef GVF_QUADRATURE_HPP
#define GVF_QUADRATURE_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace gvf {

namespace detail {

inline double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

// One level of the classic adaptive Simpson recursion.  `whole` is the
// Simpson estimate over [a, b]; the step is accepted when the two half
// estimates agree with it to within 15 * tol.
template <class F>
double adaptive_simpson_step(const F& f, double a, double fa, double b, double fb, double m,
                             double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature of f over [a, b].  The tolerance is applied as
// max(abs_tol, rel_tol * |first whole-interval estimate|).
template <class F>
double adaptive_simpson(const F& f, double a, double b, double abs_tol = 1e-12,
                        double rel_tol = 1e-11, int max_depth = 40) {
  if (!(b >= a)) throw std::invalid_argument("adaptive_simpson: bad interval");
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = detail::simpson(a, fa, b, fb, fm);
  const double tol = std::max(abs_tol, rel_tol * std::abs(whole));
  return detail::adaptive_simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

// Fixed midpoint rule with n equal cells; used by reference checks that need
// a rule independent of the adaptive machinery.
template <class F>
double midpoint_rule(const F& f, double a, double b, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("midpoint_rule: need at least one cell");
  const double w = (b - a) / static_cast<double>(n);
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    acc += f(a + (static_cast<double>(i) + 0.5) * w);
  }
  return acc * w;
}

}  // namespace gvf

#endif
