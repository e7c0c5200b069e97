// Quantum estimation primitives for the coupling J: symmetric logarithmic
// derivative, quantum Fisher information (spectral and pure-state forms),
// quantum signal-to-noise ratio, and an independent fidelity-based
// finite-difference oracle for the QFI.
//
// Conventions.  For a Gibbs state rho = sum_n p_n |psi_n><psi_n| of H(J)
// with H linear in J, first-order perturbation theory gives the exact state
// derivative in the eigenbasis:
//
//   (d rho)_nn = dp_n = -beta p_n (dH_nn - <dH>)
//   (d rho)_nm = dH_nm (p_m - p_n)/(E_m - E_n)          E_n != E_m
//   (d rho)_nm = -beta pbar dH_nm                        E_n == E_m
//
// The SLD solves d rho = (Lambda rho + rho Lambda)/2, i.e. in the eigenbasis
// Lambda_nm = 2 (d rho)_nm / (p_n + p_m), with entries dropped where the
// weight pair carries no statistical mass.
#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <complex>
#include <optional>

#include "qfisher/common.hpp"
#include "qfisher/spin_chain.hpp"

namespace qfisher {

// Weight pairs with p_n + p_m below this floor are excluded from SLD and
// QFI sums; those directions carry no statistical weight.
inline constexpr double default_weight_floor = 1e-14;
// Energy pairs closer than this fraction of the spectral range count as
// degenerate.
inline constexpr double default_degeneracy_rtol = 1e-10;

struct SLDOperator {
  ComplexMatrix matrix;
  double truncation_tol = default_weight_floor;
};

struct QFIValue {
  double value = 0;
  double classical_part = 0;  // thermal-population term
  double quantum_part = 0;    // basis-rotation term
};

// Quantum signal-to-noise ratio Q = J^2 G.
inline double qsnr(double coupling, const QFIValue &qfi) {
  if (!(coupling > 0)) throw DomainError("qsnr: coupling must be positive");
  return coupling * coupling * qfi.value;
}

namespace detail {

// dE_n/dJ and dp_n/dJ from the Hellmann-Feynman theorem; zero population
// flow at beta = inf (gapped ground state assumed by the callers).
inline RealVector gibbs_weight_derivatives(const SpectralState &state,
                                           const RealVector &denergies) {
  const auto n = state.weights.size();
  RealVector dp = RealVector::Zero(n);
  if (state.zero_temperature()) return dp;
  const double mean = state.weights.dot(denergies);
  for (Eigen::Index i = 0; i < n; ++i)
    dp[i] = -state.beta * state.weights[i] * (denergies[i] - mean);
  return dp;
}

}  // namespace detail

// d rho / dJ expressed in the eigenbasis of the state.  dH must be given in
// the original basis.
inline ComplexMatrix state_derivative_eigenbasis(const SpectralState &state,
                                                 const ComplexMatrix &dH) {
  if (dH.rows() != state.vectors.rows() || dH.cols() != state.vectors.rows())
    throw DomainError("state_derivative_eigenbasis: dimension mismatch");
  const ComplexMatrix dHe = state.vectors.adjoint() * dH * state.vectors;
  const auto n = state.energies.size();
  const double range = std::max(state.energies[n - 1] - state.energies[0], 1e-300);
  const double deg_tol = default_degeneracy_rtol * range;
  const bool zero_t = state.zero_temperature();

  ComplexMatrix deriv = ComplexMatrix::Zero(n, n);
  const RealVector dp =
      detail::gibbs_weight_derivatives(state, dHe.diagonal().real());
  for (Eigen::Index a = 0; a < n; ++a) deriv(a, a) = dp[a];
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      std::complex<double> value;
      if (std::abs(state.energies[b] - state.energies[a]) <= deg_tol) {
        // degenerate pair: divided difference of exp(-beta E) collapses to
        // the derivative; drops out entirely at T = 0
        if (zero_t) continue;
        value = -state.beta * 0.5 * (state.weights[a] + state.weights[b]) * dHe(a, b);
      } else {
        value = dHe(a, b) * (state.weights[b] - state.weights[a]) /
                (state.energies[b] - state.energies[a]);
      }
      deriv(a, b) = value;
      deriv(b, a) = std::conj(value);
    }
  }
  return deriv;
}

// SLD of the Gibbs statistical model in the original basis.
inline SLDOperator sld_spectral(const SpectralState &state, const ComplexMatrix &dH,
                                double truncation_tol = default_weight_floor) {
  ComplexMatrix lambda = state_derivative_eigenbasis(state, dH);
  const auto n = state.energies.size();
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const double mass = state.weights[a] + state.weights[b];
      lambda(a, b) = (mass < truncation_tol) ? 0.0 : lambda(a, b) * 2.0 / mass;
    }
  }
  return {state.vectors * lambda * state.vectors.adjoint(), truncation_tol};
}

// Tr[rho Lambda] and Tr[rho Lambda^2]; the latter equals the QFI when
// Lambda is the SLD of `state`.
inline double trace_rho_op(const SpectralState &state, const ComplexMatrix &op) {
  return (state.vectors.adjoint() * op * state.vectors)
      .diagonal()
      .real()
      .dot(state.weights);
}

inline double trace_rho_op_squared(const SpectralState &state, const ComplexMatrix &op) {
  const ComplexMatrix oe = state.vectors.adjoint() * op * state.vectors;
  double total = 0;
  for (Eigen::Index a = 0; a < oe.rows(); ++a)
    total += state.weights[a] * oe.row(a).squaredNorm();
  return total;
}

// Quantum Fisher information for J from spectral data:
//
//   G = sum_n (dp_n)^2/p_n
//     + 2 sum_{n != m} |<psi_n|d psi_m>|^2 (p_n - p_m)^2/(p_n + p_m)
//
// with <psi_n|d psi_m> = dH_nm/(E_m - E_n).  Degenerate pairs contribute
// zero: their Gibbs weights coincide, so the (p_n - p_m)^2 factor vanishes;
// a degenerate pair with unequal weights signals inconsistent input.
inline QFIValue qfi_spectral(const SpectralState &state, const ComplexMatrix &dH,
                             double truncation_tol = default_weight_floor) {
  if (dH.rows() != state.vectors.rows() || dH.cols() != state.vectors.rows())
    throw DomainError("qfi_spectral: dimension mismatch");
  const ComplexMatrix dHe = state.vectors.adjoint() * dH * state.vectors;
  const auto n = state.energies.size();
  const double range = std::max(state.energies[n - 1] - state.energies[0], 1e-300);
  const double deg_tol = default_degeneracy_rtol * range;

  QFIValue out;
  if (!state.zero_temperature()) {
    const RealVector dp =
        detail::gibbs_weight_derivatives(state, dHe.diagonal().real());
    for (Eigen::Index a = 0; a < n; ++a)
      if (state.weights[a] > truncation_tol)
        out.classical_part += dp[a] * dp[a] / state.weights[a];
  }
  const double beta_scale = state.zero_temperature() ? 1.0 : state.beta;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double mass = state.weights[a] + state.weights[b];
      if (mass < truncation_tol) continue;
      const double diff = state.weights[a] - state.weights[b];
      if (std::abs(state.energies[b] - state.energies[a]) <= deg_tol) {
        const double weight_tol =
            10 * beta_scale * deg_tol * std::max(state.weights[a], state.weights[b]) + 1e-15;
        if (std::abs(diff) > weight_tol)
          throw DegeneracyError(
              "qfi_spectral: degenerate energies carry unequal weights; "
              "input is not a Gibbs state");
        continue;
      }
      const double overlap2 =
          std::norm(dHe(a, b)) /
          ((state.energies[b] - state.energies[a]) * (state.energies[b] - state.energies[a]));
      out.quantum_part += 4.0 * overlap2 * diff * diff / mass;
    }
  }
  out.value = out.classical_part + out.quantum_part;
  return out;
}

// Zero-temperature QFI of a non-degenerate ground state,
// G = 4 sum_{n>0} |<psi_n|dH|psi_0>|^2/(E_n - E_0)^2.
inline QFIValue qfi_pure_state(const RealVector &energies, const ComplexMatrix &vectors,
                               const ComplexMatrix &dH) {
  const auto n = energies.size();
  if (n < 2) throw DomainError("qfi_pure_state: need at least two levels");
  const double range = std::max(energies[n - 1] - energies[0], 1e-300);
  if (energies[1] - energies[0] <= default_degeneracy_rtol * range)
    throw DegeneracyError("qfi_pure_state: degenerate ground state, use finite beta");
  const Eigen::VectorXcd column = dH * vectors.col(0);
  QFIValue out;
  for (Eigen::Index a = 1; a < n; ++a) {
    const double gap = energies[a] - energies[0];
    out.quantum_part += 4.0 * std::norm(vectors.col(a).dot(column)) / (gap * gap);
  }
  out.value = out.quantum_part;
  return out;
}

inline QFIValue qfi_pure_state(const SpectralState &state, const ComplexMatrix &dH) {
  return qfi_pure_state(state.energies, state.vectors, dH);
}

// ---------------------------------------------------------------------------
// Single-qubit SLD for rho = exp(-a.sigma)/Z with a J-dependent Bloch
// vector a.  Writing t = tanh|a|, n = a/|a|, da = d a/dJ:
//
//   Lambda = -t (n.da) 1 - (n.da) n.sigma - t (da_perp/|a|).sigma
//
// which is the unique solution of the SLD equation for this family (it
// satisfies Tr[rho Lambda] = 0 identically).  Assembling it per block of a
// block-diagonal Hamiltonian requires adding d(log w_block)/dJ times the
// block identity for the Gibbs weight flow between blocks.
// ---------------------------------------------------------------------------
inline Eigen::Matrix2cd single_qubit_sld(const Eigen::Vector3d &a, const Eigen::Vector3d &da) {
  const double mod = a.norm();
  if (mod < 1e-14) throw DomainError("single_qubit_sld: Bloch vector direction is singular");
  const Eigen::Vector3d unit = a / mod;
  const double dmod = unit.dot(da);
  const Eigen::Vector3d dunit = (da - unit * dmod) / mod;
  const double t = std::tanh(mod);

  const Eigen::Vector3d vec = -dmod * unit - t * dunit;
  const std::complex<double> im(0, 1);
  Eigen::Matrix2cd out;
  out << vec.z(), vec.x() - im * vec.y(), vec.x() + im * vec.y(), -vec.z();
  out += -t * dmod * Eigen::Matrix2cd::Identity();
  return out;
}

// ---------------------------------------------------------------------------
// Fidelity-based finite-difference oracle.  The Bures line element obeys
// ds^2 = G dJ^2 / 4 and d_B^2 = 2 (1 - sqrt(F)), so
//
//   G  ~=  8 (1 - sqrt(F(rho_J, rho_{J+dJ}))) / dJ^2 .
//
// sqrt(F) = || sqrt(rho) sqrt(sigma) ||_tr is evaluated as a singular value
// sum in 80-bit extended precision: the signal 1 - sqrt(F) is O(G dJ^2),
// around 1e-11 at the default step, which double-precision eigensolver
// noise would swamp.  This path shares nothing with qfi_spectral beyond the
// Hamiltonian builder.
// ---------------------------------------------------------------------------
namespace detail {

using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// sqrt(rho) for the Gibbs state of the chain, in extended precision.
inline LongMatrix sqrt_gibbs_long(const SpinChainParams &params) {
  const LongMatrix ham = ising_matrix<long double>(
      params.sites, static_cast<long double>(params.coupling),
      static_cast<long double>(params.field));
  Eigen::SelfAdjointEigenSolver<LongMatrix> solver(ham);
  const LongVector energies = solver.eigenvalues();
  const auto n = energies.size();
  LongVector half_weights(n);
  if (params.zero_temperature()) {
    const long double range = energies[n - 1] - energies[0];
    const long double tol = 1e-9L * range;
    Eigen::Index degeneracy = 0;
    while (degeneracy < n && energies[degeneracy] - energies[0] <= tol) ++degeneracy;
    half_weights.setZero();
    half_weights.head(degeneracy)
        .setConstant(1.0L / std::sqrt(static_cast<long double>(degeneracy)));
  } else {
    const long double beta = static_cast<long double>(params.beta);
    long double norm = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      norm += std::exp(-beta * (energies[i] - energies[0]));
    const long double root = std::sqrt(norm);
    for (Eigen::Index i = 0; i < n; ++i)
      half_weights[i] = std::exp(-beta * (energies[i] - energies[0]) / 2.0L) / root;
  }
  return solver.eigenvectors() * half_weights.asDiagonal() *
         solver.eigenvectors().transpose();
}

}  // namespace detail

// Uhlmann fidelity F(rho_a, rho_b) = (Tr sqrt(sqrt(rho_a) rho_b sqrt(rho_a)))^2
// between two Gibbs states of the chain.
inline double uhlmann_fidelity(const SpinChainParams &a, const SpinChainParams &b,
                               int site_cap = default_site_cap) {
  a.validate();
  b.validate();
  detail::check_chain_size(a.sites, site_cap);
  if (a.sites != b.sites) throw DomainError("uhlmann_fidelity: chain sizes differ");
  const detail::LongMatrix product = detail::sqrt_gibbs_long(a) * detail::sqrt_gibbs_long(b);
  Eigen::JacobiSVD<detail::LongMatrix> svd(product);
  const long double root = svd.singularValues().sum();
  return static_cast<double>(root * root);
}

// Finite-difference QFI estimate from the Bures distance between rho(J) and
// rho(J + dJ).  Default step dJ = 1e-5 J; steps below 1e-9 J are rejected.
inline double bures_qfi_oracle(const SpinChainParams &params,
                               std::optional<double> step = std::nullopt,
                               int site_cap = default_site_cap) {
  params.validate();
  detail::check_chain_size(params.sites, site_cap);
  const double dj = step.value_or(1e-5 * params.coupling);
  if (!(dj > 0) || dj < 1e-9 * params.coupling)
    throw StepSizeError("bures_qfi_oracle: step below 1e-9 J loses all precision");

  SpinChainParams shifted = params;
  shifted.coupling += dj;
  const detail::LongMatrix product =
      detail::sqrt_gibbs_long(params) * detail::sqrt_gibbs_long(shifted);
  Eigen::JacobiSVD<detail::LongMatrix> svd(product);
  const long double sqrt_fidelity = svd.singularValues().sum();
  const long double djl = static_cast<long double>(dj);
  return static_cast<double>(8.0L * (1.0L - sqrt_fidelity) / (djl * djl));
}

}  // namespace qfisher
