// Dense exact diagonalization of the periodic transverse-field Ising chain
//
//   H = -J sum_k sigma^x_k sigma^x_{k+1} - h sum_k sigma^z_k ,
//
// and Gibbs thermal states for L <= default_site_cap sites.  Basis
// convention: computational sigma^z basis ordered by binary encoding with
// site 1 as the most significant bit; |0> is the sigma^z = +1 state.  The
// magnetization projectors in measurement.hpp rely on this ordering.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "qfisher/common.hpp"

namespace qfisher {

using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

inline bool is_hermitian(const ComplexMatrix &m, double tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

namespace detail {

inline void check_chain_size(int sites, int site_cap) {
  if (sites < 2) throw DomainError("chain needs at least 2 sites");
  if (sites > site_cap)
    throw CapacityError("chain of " + std::to_string(sites) +
                        " sites exceeds the dense cap of " + std::to_string(site_cap));
}

// H in the computational basis is real symmetric for any scalar precision.
// The bond term flips the two adjacent spins; under PBC the L=2 chain picks
// up the same bond twice.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> ising_matrix(int sites, Scalar coupling,
                                                                   Scalar field) {
  const std::int64_t dim = std::int64_t{1} << sites;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> ham =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(dim, dim);
  for (std::int64_t s = 0; s < dim; ++s) {
    const int flips = __builtin_popcountll(static_cast<unsigned long long>(s));
    ham(s, s) = -field * Scalar(sites - 2 * flips);
    for (int k = 0; k < sites; ++k) {
      const std::int64_t mask = (std::int64_t{1} << (sites - 1 - k)) |
                                (std::int64_t{1} << (sites - 1 - (k + 1) % sites));
      ham(s ^ mask, s) -= coupling;
    }
  }
  return ham;
}

}  // namespace detail

// H(params) as an explicit Hermitian matrix.
inline ComplexMatrix build_hamiltonian(const SpinChainParams &params,
                                       int site_cap = default_site_cap) {
  params.validate();
  detail::check_chain_size(params.sites, site_cap);
  return detail::ising_matrix<double>(params.sites, params.coupling, params.field)
      .cast<std::complex<double>>();
}

// dH/dJ = -sum_k sigma^x_k sigma^x_{k+1}; independent of J and h.
inline ComplexMatrix d_hamiltonian_dJ(const SpinChainParams &params,
                                      int site_cap = default_site_cap) {
  params.validate();
  detail::check_chain_size(params.sites, site_cap);
  return detail::ising_matrix<double>(params.sites, 1.0, 0.0).cast<std::complex<double>>();
}

// ---------------------------------------------------------------------------
// Eigendecomposition of a Hermitian operator together with Gibbs weights:
// a thermal density matrix in diagonal form.
// ---------------------------------------------------------------------------
struct SpectralState {
  RealVector energies;    // ascending
  ComplexMatrix vectors;  // orthonormal eigenbasis, one column per energy
  RealVector weights;     // p_n = exp(-beta E_n)/Z; sums to 1
  double beta = 1;
  // log Tr exp(-beta H) for finite beta.  At beta = inf stores the
  // regularized limit log(ground-space dimension) = lim [log Z + beta E_0].
  double log_partition = 0;

  double partition() const { return std::exp(log_partition); }
  int dimension() const { return static_cast<int>(energies.size()); }
  bool zero_temperature() const { return std::isinf(beta); }

  // rho in the original basis.
  ComplexMatrix density_matrix() const {
    return vectors * weights.asDiagonal() * vectors.adjoint();
  }
};

// Full eigendecomposition plus Gibbs weights.  Weights are computed with the
// spectrum shifted by E_min, so no overflow occurs for any finite beta.  At
// beta = inf, weight 1 is spread uniformly over the numerically degenerate
// ground space (relative tolerance 1e-9 of the spectral range).
inline SpectralState gibbs_state(const ComplexMatrix &hamiltonian, double beta) {
  if (!(beta > 0)) throw DomainError("gibbs_state: beta must be positive");
  if (!is_hermitian(hamiltonian))
    throw DomainError("gibbs_state: operator is not Hermitian within 1e-12");

  SpectralState state;
  state.beta = beta;
  if (hamiltonian.imag().cwiseAbs().maxCoeff() == 0.0) {
    // real symmetric fast path; every Ising Hamiltonian lands here
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hamiltonian.real());
    state.energies = solver.eigenvalues();
    state.vectors = solver.eigenvectors().cast<std::complex<double>>();
  } else {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hamiltonian);
    state.energies = solver.eigenvalues();
    state.vectors = solver.eigenvectors();
  }

  const auto n = state.energies.size();
  state.weights.resize(n);
  const double ground = state.energies[0];
  if (std::isinf(beta)) {
    const double range = state.energies[n - 1] - ground;
    const double tol = 1e-9 * range;
    Eigen::Index degeneracy = 0;
    while (degeneracy < n && state.energies[degeneracy] - ground <= tol) ++degeneracy;
    state.weights.setZero();
    state.weights.head(degeneracy).setConstant(1.0 / static_cast<double>(degeneracy));
    state.log_partition = std::log(static_cast<double>(degeneracy));
    return state;
  }
  double norm = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    state.weights[i] = std::exp(-beta * (state.energies[i] - ground));
    norm += state.weights[i];
  }
  state.weights /= norm;
  state.log_partition = std::log(norm) - beta * ground;
  return state;
}

inline SpectralState gibbs_state(const SpinChainParams &params,
                                 int site_cap = default_site_cap) {
  return gibbs_state(build_hamiltonian(params, site_cap), params.beta);
}

}  // namespace qfisher
