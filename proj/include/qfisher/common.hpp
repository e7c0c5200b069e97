// Shared domain types, error taxonomy and numeric constants.
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qfisher {

inline constexpr const char *version_string = "0.1.0";

// Largest chain length handled by dense diagonalization (2^L states).
inline constexpr int default_site_cap = 12;

// Catalan's constant and zeta(3), used by the quantum-critical asymptotics.
inline constexpr double catalan_constant = 0.91596559417721901505460351493;
inline constexpr double zeta_three = 1.20205690315959428539973816151;

inline constexpr double pi = 3.14159265358979323846264338328;

// ---------------------------------------------------------------------------
// Error taxonomy.  The CLI maps these onto exit codes: config/domain -> 2,
// capacity -> 4, everything numeric -> 3.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameter values or malformed operator input.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Chain length exceeds the dense-matrix cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Configuration file / CLI flag problems.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A computation ran into a degenerate subspace it cannot handle.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

// Finite-difference step below the float-precision floor.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

// Quadrature or other iterative scheme missed its accuracy target.
class AccuracyError : public Error {
 public:
  using Error::Error;
};

// Asymptotic formula evaluated outside its validity regime.
class RegimeError : public Error {
 public:
  using Error::Error;
};

// Optimizer found no interior maximum in the scanned range.
class ScanRangeError : public Error {
 public:
  using Error::Error;
};

// Posterior mass piled up at the grid boundary.
class GridError : public Error {
 public:
  using Error::Error;
};

// Not enough data points for a least-squares fit.
class FitError : public Error {
 public:
  using Error::Error;
};

// Momentum-space formulas restricted to the even-fermion sector.
class SectorError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Statistical-model coordinates of a Gibbs state of the transverse-field
// Ising chain.  beta = +inf selects the ground-state (zero temperature)
// ensemble.
// ---------------------------------------------------------------------------
struct SpinChainParams {
  int sites = 2;        // L
  double coupling = 1;  // J > 0
  double field = 0;     // h >= 0
  double beta = 1;      // inverse temperature, (0, inf]

  bool zero_temperature() const { return std::isinf(beta); }

  void validate() const {
    if (sites < 2) throw DomainError("SpinChainParams: need at least 2 sites");
    if (!(coupling > 0) || !std::isfinite(coupling))
      throw DomainError("SpinChainParams: coupling J must be positive and finite");
    if (!(field >= 0) || !std::isfinite(field))
      throw DomainError("SpinChainParams: field h must be nonnegative and finite");
    if (!(beta > 0)) throw DomainError("SpinChainParams: beta must be positive");
  }
};

// 1 - sech(x) without cancellation for small x and without overflow for
// large x.  Shows up in every finite-temperature momentum / quadrature sum.
inline double one_minus_sech(double x) {
  x = std::abs(x);
  if (x < 1e-3) {
    const double x2 = x * x;
    return 0.5 * x2 * (1.0 - x2 * (5.0 / 12.0) + x2 * x2 * (61.0 / 360.0));
  }
  const double e = std::exp(-x);
  return 1.0 - 2.0 * e / (1.0 + e * e);
}

// sech(x), overflow-safe.
inline double sech(double x) {
  x = std::abs(x);
  const double e = std::exp(-x);
  return 2.0 * e / (1.0 + e * e);
}

}  // namespace qfisher
