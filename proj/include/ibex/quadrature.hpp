#pragma once

#include <cmath>
#include <functional>

namespace ibex {

// Adaptive Simpson integration. The tolerance is absolute; recursion stops
// once the local Richardson error estimate is below the budget for the
// subinterval.
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol, int max_depth = 60) {
  struct Impl {
    const std::function<double(double)>& f;
    int max_depth;
    double run(double a, double fa, double b, double fb, double m, double fm,
               double whole, double tol, int depth) const {
      double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      double flm = f(lm), frm = f(rm);
      double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      double err = left + right - whole;
      if (depth >= max_depth || std::abs(err) <= 15.0 * tol) {
        return left + right + err / 15.0;
      }
      return run(a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1) +
             run(m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1);
    }
  };
  if (!(b > a)) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fb = f(b), fm = f(m);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return Impl{f, max_depth}.run(a, fa, b, fb, m, fm, whole, tol, 0);
}

}  // namespace ibex
