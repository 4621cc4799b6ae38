#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace zrp {

/* Adaptive Simpson quadrature with absolute tolerance.  Recursion uses the
 * standard 15x error estimate; depth-capped so a pathological integrand
 * fails loudly instead of hanging. */
namespace detail {
inline double simpson(const std::function<double(double)>&, double a, double fa, double b,
                      double fb, double /*m*/, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adapt(const std::function<double(double)>& f, double a, double fa, double b,
                    double fb, double m, double fm, double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(f, a, fa, m, fm, lm, flm);
  double right = simpson(f, m, fm, b, fb, rm, frm);
  double delta = left + right - whole;
  if (depth <= 0) throw std::runtime_error("adaptive quadrature: depth limit reached");
  if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adapt(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/* panels: initial uniform subdivision before adaptivity kicks in; raise it
 * for oscillatory integrands so no feature is stepped over. */
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int panels = 8, int max_depth = 48) {
  if (!(b > a)) {
    if (a == b) return 0.0;
    throw std::invalid_argument("integrate: bad interval");
  }
  double total = 0.0;
  double h = (b - a) / panels;
  for (int i = 0; i < panels; ++i) {
    double x0 = a + i * h, x1 = (i + 1 == panels) ? b : x0 + h;
    double xm = 0.5 * (x0 + x1);
    double f0 = f(x0), f1 = f(x1), fm = f(xm);
    double whole = detail::simpson(f, x0, f0, x1, f1, xm, fm);
    total += detail::adapt(f, x0, f0, x1, f1, xm, fm, whole, tol / panels, max_depth);
  }
  return total;
}

}  // namespace zrp
