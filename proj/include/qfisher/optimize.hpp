// 1-D maximization used for optimal-field searches: coarse grid scan
// followed by golden-section refinement of the bracketed peak.  Golden
// section only needs unimodality on the bracket, so it also survives the
// cusp-shaped thermodynamic-limit peaks where parabolic steps would stall.
#pragma once

#include <functional>
#include <vector>

#include "qfisher/common.hpp"

namespace qfisher {

struct PeakResult {
  double position = 0;
  double value = 0;
};

// Golden-section maximization on [a, b]; terminates at bracket width `tol`.
inline PeakResult golden_section_max(const std::function<double(double)> &f, double a,
                                     double b, double tol = 1e-8) {
  constexpr double inv_phi = 0.6180339887498948482;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

// Scan `points` equally spaced values on (lo, hi], bracket the best one and
// refine.  Throws ScanRangeError when the best coarse value sits on either
// edge, i.e. no interior maximum was bracketed.
inline PeakResult maximize_on_range(const std::function<double(double)> &f, double lo,
                                    double hi, int points = 400, double tol = 1e-8) {
  if (!(hi > lo) || points < 3) throw ScanRangeError("maximize_on_range: empty scan range");
  std::vector<double> xs(points), vs(points);
  const double step = (hi - lo) / points;
  for (int i = 0; i < points; ++i) {
    xs[i] = lo + step * (i + 1);
    vs[i] = f(xs[i]);
  }
  int best = 0;
  for (int i = 1; i < points; ++i)
    if (vs[i] > vs[best]) best = i;
  if (best == 0 || best == points - 1)
    throw ScanRangeError("maximize_on_range: no interior maximum in scan range");
  return golden_section_max(f, xs[best - 1], xs[best + 1], tol);
}

// Bisection on the sign change of a one-sided difference quotient.  Used to
// pin down cusp peaks where the derivative jumps instead of vanishing.
inline double bisect_slope_sign_change(const std::function<double(double)> &f, double a,
                                       double b, double fd_step, double tol = 1e-8) {
  auto slope = [&](double x) { return (f(x + fd_step) - f(x - fd_step)) / (2 * fd_step); };
  double sa = slope(a), sb = slope(b);
  if (sa <= 0 || sb >= 0) throw ScanRangeError("bisect_slope_sign_change: peak not bracketed");
  while (b - a > tol) {
    const double m = 0.5 * (a + b);
    if (slope(m) > 0)
      a = m;
    else
      b = m;
  }
  return 0.5 * (a + b);
}

}  // namespace qfisher
