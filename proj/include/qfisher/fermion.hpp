// Bogoliubov momentum-space picture of the chain.  In the even-fermion
// sector the quasi-momenta are k = (2n+1) pi / L, n = 0 .. L/2 - 1, each
// mode carrying
//
//   eps_k = J cos k + h,   Delta_k = J sin k,
//   Lambda_k = sqrt(eps^2 + Delta^2),   theta_k = arctan(eps/Delta),
//
// with analytic J-derivatives dLambda = (J + h cos k)/Lambda and
// dtheta = -h sin k / Lambda^2.  The finite-temperature QFI sums run over
// this positive-k set; the L -> infinity limit then reproduces the
// thermodynamic quadrature densities with no extra factor.
//
// Lambda^2 is evaluated as (J-h)^2 + 4Jh cos^2(k/2), which is exact and
// avoids the cancellation of J^2 + h^2 + 2Jh cos k near k = pi, h = J.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "qfisher/common.hpp"
#include "qfisher/estimation.hpp"
#include "qfisher/optimize.hpp"

namespace qfisher {

struct MomentumGrid {
  int sites = 0;
  std::vector<double> momenta;  // ascending, all in (0, pi)

  static MomentumGrid even_sector(int sites) {
    if (sites < 2 || sites % 2 != 0)
      throw SectorError("momentum grid: even-fermion sector needs even L >= 2");
    MomentumGrid grid;
    grid.sites = sites;
    grid.momenta.resize(sites / 2);
    for (int n = 0; n < sites / 2; ++n)
      grid.momenta[n] = (2.0 * n + 1.0) * pi / sites;
    return grid;
  }
};

struct DispersionPoint {
  double momentum = 0;
  double kinetic = 0;        // eps_k
  double pairing = 0;        // Delta_k
  double energy = 0;         // Lambda_k
  double angle = 0;          // theta_k
  double denergy_dJ = 0;     // dLambda_k/dJ
  double dangle_dJ = 0;      // dtheta_k/dJ
};

namespace detail {

inline double lambda_squared(double coupling, double field, double k) {
  const double c = std::cos(0.5 * k);
  const double gap = coupling - field;
  return gap * gap + 4.0 * coupling * field * c * c;
}

}  // namespace detail

inline DispersionPoint dispersion(double coupling, double field, double k) {
  if (!(coupling > 0)) throw DomainError("dispersion: coupling must be positive");
  if (!(field >= 0)) throw DomainError("dispersion: field must be nonnegative");
  if (!(k > 0) || !(k < pi)) throw DomainError("dispersion: momentum outside (0, pi)");
  DispersionPoint p;
  p.momentum = k;
  p.kinetic = coupling * std::cos(k) + field;
  p.pairing = coupling * std::sin(k);
  const double lam2 = detail::lambda_squared(coupling, field, k);
  p.energy = std::sqrt(lam2);
  p.angle = std::atan2(p.kinetic, p.pairing);
  const double c = std::cos(0.5 * k);
  p.denergy_dJ = ((coupling - field) + 2.0 * field * c * c) / p.energy;
  p.dangle_dJ = -field * std::sin(k) / lam2;
  return p;
}

// All even-sector modes of an L-site chain at once.
inline std::vector<DispersionPoint> dispersion_table(int sites, double coupling,
                                                     double field) {
  const auto grid = MomentumGrid::even_sector(sites);
  std::vector<DispersionPoint> table;
  table.reserve(grid.momenta.size());
  for (const double k : grid.momenta) table.push_back(dispersion(coupling, field, k));
  return table;
}

// T = 0 QFI in the even sector: G = sum_k h^2 sin^2 k / Lambda_k^4.
// Purely the basis-rotation (quantum) term.
inline QFIValue qfi_zero_temperature_sum(int sites, double coupling, double field) {
  const auto grid = MomentumGrid::even_sector(sites);
  if (!(coupling > 0) || !(field >= 0))
    throw DomainError("qfi_zero_temperature_sum: invalid parameters");
  double total = 0, carry = 0;
  for (const double k : grid.momenta) {
    const double lam2 = detail::lambda_squared(coupling, field, k);
    const double s = std::sin(k);
    const double term = field * field * s * s / (lam2 * lam2);
    const double y = term - carry;  // Kahan: fixed order, reproducible
    const double t = total + y;
    carry = (t - total) - y;
    total = t;
  }
  QFIValue out;
  out.quantum_part = total;
  out.value = total;
  return out;
}

// Finite-temperature QFI in the even sector:
//
//   G = (beta^2/4) sum_k (dLambda_k)^2 sech^2(beta Lambda_k / 2)
//     +            sum_k [1 - sech(beta Lambda_k)] (dtheta_k)^2 .
inline QFIValue qfi_finite_temperature_sum(int sites, double coupling, double field,
                                           double beta) {
  const auto grid = MomentumGrid::even_sector(sites);
  if (!(coupling > 0) || !(field >= 0))
    throw DomainError("qfi_finite_temperature_sum: invalid parameters");
  if (!(beta > 0) || std::isinf(beta))
    throw DomainError("qfi_finite_temperature_sum: beta must be positive and finite");
  double classical = 0, cc = 0, quantum = 0, cq = 0;
  for (const double k : grid.momenta) {
    const double lam2 = detail::lambda_squared(coupling, field, k);
    const double lam = std::sqrt(lam2);
    const double c = std::cos(0.5 * k);
    const double dlam = ((coupling - field) + 2.0 * field * c * c) / lam;
    const double dth = -field * std::sin(k) / lam2;

    const double s_half = sech(0.5 * beta * lam);
    const double term_c = 0.25 * beta * beta * dlam * dlam * s_half * s_half;
    double y = term_c - cc;
    double t = classical + y;
    cc = (t - classical) - y;
    classical = t;

    const double term_q = one_minus_sech(beta * lam) * dth * dth;
    y = term_q - cq;
    t = quantum + y;
    cq = (t - quantum) - y;
    quantum = t;
  }
  QFIValue out;
  out.classical_part = classical;
  out.quantum_part = quantum;
  out.value = classical + quantum;
  return out;
}

// Quasi-critical Euler-Maclaurin expansion of the T = 0 QFI at h = J + z/L:
//
//   G = L^2 (1/(8 J^2) - z^2/(48 J^4)) - L/(8 J^2) + O(1).
//
// The z^2 coefficient follows from the curvature of each mode term,
// (ln f_k)''(0) = -1/(J sin(k/2))^2, summed with sum_n (2n+1)^{-4} =
// pi^4/96; the direct momentum sum confirms it.
inline double euler_maclaurin_expansion(int sites, double coupling, double z) {
  const double j2 = coupling * coupling;
  const double big = sites * static_cast<double>(sites);
  return big * (1.0 / (8.0 * j2) - z * z / (48.0 * j2 * j2)) - sites / (8.0 * j2);
}

// Field maximizing the momentum-sum QFI over h in (0, h_max_factor * J].
// Coarse 400-point scan plus golden-section refinement to 1e-8 width.
inline double pseudo_critical_field(int sites, double coupling, double beta,
                                    double h_max_factor = 3.0) {
  std::function<double(double)> objective;
  if (std::isinf(beta)) {
    objective = [=](double h) { return qfi_zero_temperature_sum(sites, coupling, h).value; };
  } else {
    objective = [=](double h) {
      return qfi_finite_temperature_sum(sites, coupling, h, beta).value;
    };
  }
  return maximize_on_range(objective, 0.0, h_max_factor * coupling).position;
}

// ---------------------------------------------------------------------------
// Finite-size scaling of the QFI: least-squares fit of log G against log L.
// ---------------------------------------------------------------------------
struct ScalingFit {
  std::vector<int> sizes;
  std::vector<double> qfi_values;
  double exponent = 0;         // alpha in G ~ c L^alpha
  double log_coefficient = 0;  // log c
  double residual = 0;         // rms residual of the fit in log space
};

inline ScalingFit scaling_study(const std::vector<int> &sizes, double coupling, double field,
                                double beta) {
  if (sizes.size() < 3) throw FitError("scaling_study: need at least 3 sizes");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] % 2 != 0) throw SectorError("scaling_study: sizes must be even");
    if (i > 0 && sizes[i] <= sizes[i - 1])
      throw FitError("scaling_study: sizes must be strictly increasing");
  }
  ScalingFit fit;
  fit.sizes = sizes;
  fit.qfi_values.reserve(sizes.size());
  for (const int length : sizes) {
    const double value =
        std::isinf(beta) ? qfi_zero_temperature_sum(length, coupling, field).value
                         : qfi_finite_temperature_sum(length, coupling, field, beta).value;
    if (!(value > 0)) throw FitError("scaling_study: nonpositive QFI, log fit impossible");
    fit.qfi_values.push_back(value);
  }
  const auto n = static_cast<double>(sizes.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double x = std::log(static_cast<double>(sizes[i]));
    const double y = std::log(fit.qfi_values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  fit.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.log_coefficient = (sy - fit.exponent * sx) / n;
  double ss = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double pred =
        fit.log_coefficient + fit.exponent * std::log(static_cast<double>(sizes[i]));
    const double r = std::log(fit.qfi_values[i]) - pred;
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

}  // namespace qfisher
