// Adaptive Gauss-Kronrod (G7, K15) quadrature to an absolute tolerance.
// The thermodynamic-limit integrands develop a near-delta spike at the
// dispersion minimum for beta >> 1, so callers can pre-split the interval;
// the adaptive driver then refines the worst panel until the summed error
// estimate meets the target.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <string>
#include <vector>

#include "qfisher/common.hpp"

namespace qfisher {

namespace detail {

// QUADPACK dqk15 abscissae/weights on [-1, 1].
inline constexpr double gk_x[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, integral, error;
  bool operator<(const Panel &o) const {
    // priority_queue pops the largest; tie-break on position for determinism
    if (error != o.error) return error < o.error;
    return a > o.a;
  }
};

inline Panel gk15(const std::function<double(double)> &f, double a, double b) {
  const double c = 0.5 * (a + b), half = 0.5 * (b - a);
  double kron = 0, gauss = 0;
  for (int i = 0; i < 8; ++i) {
    const double dx = half * gk_x[i];
    const double fsum = (i < 7) ? f(c - dx) + f(c + dx) : f(c);
    kron += gk_wk[i] * fsum;
    if (i % 2 == 1) gauss += gk_wg[i / 2] * fsum;
  }
  kron *= half;
  gauss *= half;
  return {a, b, kron, std::abs(kron - gauss)};
}

}  // namespace detail

// Integrate f over the panels delimited by `breakpoints` (ascending), to
// absolute tolerance `abs_tol`, refining at most `max_panels` sub-intervals.
// Throws AccuracyError carrying the achieved tolerance on failure.
inline double integrate_adaptive(const std::function<double(double)> &f,
                                 const std::vector<double> &breakpoints, double abs_tol,
                                 std::size_t max_panels = (1u << 20)) {
  if (breakpoints.size() < 2) throw DomainError("integrate_adaptive: need an interval");
  std::priority_queue<detail::Panel> queue;
  double integral = 0, error = 0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    auto p = detail::gk15(f, breakpoints[i], breakpoints[i + 1]);
    integral += p.integral;
    error += p.error;
    queue.push(p);
  }
  std::size_t panels = queue.size();
  while (error > abs_tol && !queue.empty()) {
    if (panels >= max_panels)
      throw AccuracyError("integrate_adaptive: tolerance not met, achieved " +
                          std::to_string(error));
    const auto worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(worst.a < mid && mid < worst.b)) continue;  // interval at float resolution
    auto left = detail::gk15(f, worst.a, mid);
    auto right = detail::gk15(f, mid, worst.b);
    integral += left.integral + right.integral - worst.integral;
    error += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
    ++panels;
  }
  return integral;
}

inline double integrate_adaptive(const std::function<double(double)> &f, double a, double b,
                                 double abs_tol, std::size_t max_panels = (1u << 20)) {
  return integrate_adaptive(f, std::vector<double>{a, b}, abs_tol, max_panels);
}

}  // namespace qfisher
