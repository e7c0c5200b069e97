#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "qfisher/estimation.hpp"
#include "qfisher/optimize.hpp"
#include "qfisher/spin_chain.hpp"

using namespace qfisher;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double closed_form_qfi(int L, double J, double h) {
  switch (L) {
    case 2:
      return h * h / std::pow(h * h + J * J, 2);
    case 3:
      return 3.0 * h * h / (4.0 * std::pow(h * h - h * J + J * J, 2));
    case 4:
      return h * h * (std::pow(h, 4) + 4.0 * h * h * J * J + std::pow(J, 4)) /
             std::pow(std::pow(h, 4) + std::pow(J, 4), 2);
    default:
      throw std::logic_error("no closed form");
  }
}

QFIValue qfi_at(int L, double J, double h, double beta) {
  SpinChainParams p{L, J, h, beta};
  return qfi_spectral(gibbs_state(p), d_hamiltonian_dJ(p));
}

SLDOperator sld_at(int L, double J, double h, double beta) {
  SpinChainParams p{L, J, h, beta};
  return sld_spectral(gibbs_state(p), d_hamiltonian_dJ(p));
}

}  // namespace

TEST_CASE("zero-temperature closed forms for L = 2, 3, 4", "[estimation]") {
  for (const int L : {2, 3, 4}) {
    for (const double J : {0.5, 1.0, 2.3}) {
      for (const double h : {0.3, 1.0, 1.7, 2.9}) {
        const double expected = closed_form_qfi(L, J, h);
        const double got = qfi_at(L, J, h, kInf).value;
        INFO("L=" << L << " J=" << J << " h=" << h);
        CHECK(got == Catch::Approx(expected).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("closed-form values at the critical point h = J = 1", "[estimation]") {
  CHECK(qfi_at(2, 1.0, 1.0, kInf).value == Catch::Approx(0.25).epsilon(1e-12));
  CHECK(qfi_at(3, 1.0, 1.0, kInf).value == Catch::Approx(0.75).epsilon(1e-12));
  CHECK(qfi_at(4, 1.0, 1.0, kInf).value == Catch::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("QFI vanishes at h = 0 and T = 0", "[estimation]") {
  CHECK(qfi_at(2, 1.0, 0.0, kInf).value <= 1e-14);
}

TEST_CASE("QFI parts: nonnegative, additive", "[estimation]") {
  for (const double beta : {0.5, 2.0, 20.0}) {
    const auto g = qfi_at(3, 1.2, 0.8, beta);
    CHECK(g.classical_part >= -1e-12);
    CHECK(g.quantum_part >= -1e-12);
    CHECK(g.value == Catch::Approx(g.classical_part + g.quantum_part).margin(1e-10));
  }
}

TEST_CASE("QFI tends to zero with beta (maximally mixed limit)", "[estimation]") {
  CHECK(qfi_at(3, 1.0, 1.0, 1e-6).value <= 1e-8);
}

TEST_CASE("pure-state QFI matches the spectral path at beta = 1e3", "[estimation]") {
  // gaps shrink in the ordered phase at finite L, so keep h/J >= 0.6 where
  // beta * gap >> 1 holds for every size tested
  for (const int L : {2, 3, 4}) {
    for (const double J : {0.7, 1.0}) {
      for (const double h : {0.6 * J, 1.0 * J, 1.8 * J}) {
        SpinChainParams p{L, J, h, 1e3};
        const auto state = gibbs_state(p);
        const auto dH = d_hamiltonian_dJ(p);
        const double spectral = qfi_spectral(state, dH).value;
        const double pure = qfi_pure_state(state, dH).value;
        INFO("L=" << L << " J=" << J << " h=" << h);
        CHECK(std::abs(spectral - pure) <= 1e-6 * pure);
      }
    }
  }
}

TEST_CASE("pure-state QFI: closed form and commuting generator", "[estimation]") {
  SpinChainParams p{2, 1.0, 1.0, kInf};
  const auto state = gibbs_state(p);
  CHECK(qfi_pure_state(state, d_hamiltonian_dJ(p)).value ==
        Catch::Approx(0.25).epsilon(1e-12));
  // dH = H commutes with H: no state rotation, zero QFI
  const auto H = build_hamiltonian(p);
  CHECK(qfi_pure_state(state, H).value <= 1e-20);
  // degenerate ground state rejected
  SpinChainParams degenerate{2, 1.0, 0.0, kInf};
  const auto dstate = gibbs_state(degenerate);
  CHECK_THROWS_AS(qfi_pure_state(dstate, d_hamiltonian_dJ(degenerate)), DegeneracyError);
}

TEST_CASE("SLD closed form at L = 2, T = 0", "[estimation]") {
  for (const double J : {0.6, 1.0, 2.0}) {
    for (const double h : {0.4, 1.0, 2.5}) {
      const auto sld = sld_at(2, J, h, kInf);
      const double omega = std::sqrt(J * J + h * h);
      const double scale = h / (2.0 * omega * omega * omega);
      ComplexMatrix closed = ComplexMatrix::Zero(4, 4);
      closed(0, 3) = closed(3, 0) = scale * 2.0 * h;
      closed(0, 0) = -scale * 2.0 * J;
      closed(3, 3) = scale * 2.0 * J;
      INFO("J=" << J << " h=" << h);
      CHECK((sld.matrix - closed).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("SLD diagnostics: Tr[rho L] = 0, Tr[rho L^2] = QFI, defining equation",
          "[estimation]") {
  for (const int L : {2, 3, 4}) {
    for (const double beta : {1.0, 10.0, 100.0}) {
      SpinChainParams p{L, 1.0, 0.9, beta};
      const auto state = gibbs_state(p);
      const auto dH = d_hamiltonian_dJ(p);
      const auto sld = sld_spectral(state, dH);
      const auto qfi = qfi_spectral(state, dH);
      INFO("L=" << L << " beta=" << beta);
      CHECK(std::abs(trace_rho_op(state, sld.matrix)) <= 1e-8);
      CHECK(trace_rho_op_squared(state, sld.matrix) == Catch::Approx(qfi.value).margin(1e-8));
      CHECK(is_hermitian(sld.matrix, 1e-10));

      // || d rho - (L rho + rho L)/2 ||_max on the support
      const ComplexMatrix rho = state.density_matrix();
      const ComplexMatrix drho =
          state.vectors * state_derivative_eigenbasis(state, dH) * state.vectors.adjoint();
      const ComplexMatrix residual =
          drho - 0.5 * (sld.matrix * rho + rho * sld.matrix);
      CHECK(residual.cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("SLD equation residual restricted to the support at T = 0", "[estimation]") {
  SpinChainParams p{3, 1.0, 1.4, kInf};
  const auto state = gibbs_state(p);
  const auto dH = d_hamiltonian_dJ(p);
  const auto sld = sld_spectral(state, dH);
  const ComplexMatrix k_eig = state_derivative_eigenbasis(state, dH);
  const ComplexMatrix lambda_eig = state.vectors.adjoint() * sld.matrix * state.vectors;
  double defect = 0;
  for (Eigen::Index a = 0; a < state.dimension(); ++a)
    for (Eigen::Index b = 0; b < state.dimension(); ++b) {
      const double mass = state.weights[a] + state.weights[b];
      if (mass < sld.truncation_tol) continue;
      const std::complex<double> anticomm =
          0.5 * lambda_eig(a, b) * (state.weights[a] + state.weights[b]);
      defect = std::max(defect, std::abs(k_eig(a, b) - anticomm));
    }
  CHECK(defect <= 1e-10);
}

TEST_CASE("single-qubit SLD: zero and pure-modulus cases", "[estimation]") {
  const Eigen::Vector3d a(0.3, -0.4, 1.1);
  CHECK(single_qubit_sld(a, Eigen::Vector3d::Zero()).cwiseAbs().maxCoeff() <= 1e-15);

  // da parallel to a: no direction change; the Bloch component carries
  // -(da.a_hat) and the identity -tanh|a| (da.a_hat)
  const double mod = a.norm();
  const Eigen::Vector3d da = 0.37 * a / mod;
  const auto sld = single_qubit_sld(a, da);
  const Eigen::Vector3d unit = a / mod;
  const std::complex<double> im(0, 1);
  Eigen::Matrix2cd expected;
  expected << unit.z(), unit.x() - im * unit.y(), unit.x() + im * unit.y(), -unit.z();
  expected *= -0.37;
  expected += -std::tanh(mod) * 0.37 * Eigen::Matrix2cd::Identity();
  CHECK((sld - expected).cwiseAbs().maxCoeff() <= 1e-14);

  CHECK_THROWS_AS(single_qubit_sld(Eigen::Vector3d::Zero(), da), DomainError);
}

TEST_CASE("single-qubit SLD solves its defining equation and is traceless on rho",
          "[estimation]") {
  const Eigen::Vector3d a(0.8, 0.1, -0.5);
  const Eigen::Vector3d da(-0.2, 0.9, 0.4);
  const auto sld = single_qubit_sld(a, da);

  auto bloch_state = [](const Eigen::Vector3d &v) {
    const std::complex<double> im(0, 1);
    Eigen::Matrix2cd pauli_dot;
    pauli_dot << v.z(), v.x() - im * v.y(), v.x() + im * v.y(), -v.z();
    return pauli_dot;
  };
  const double mod = a.norm();
  const Eigen::Matrix2cd rho =
      0.5 * (Eigen::Matrix2cd::Identity() - std::tanh(mod) * bloch_state(a / mod));
  // d rho = -(1/2)[(1-t^2)(da.n) n.sigma + t (da_perp/|a|).sigma]
  const double t = std::tanh(mod);
  const Eigen::Vector3d unit = a / mod;
  const double dmod = unit.dot(da);
  const Eigen::Vector3d dunit = (da - unit * dmod) / mod;
  const Eigen::Matrix2cd drho =
      -0.5 * ((1 - t * t) * dmod * bloch_state(unit) + t * bloch_state(dunit));

  const Eigen::Matrix2cd residual = drho - 0.5 * (sld * rho + rho * sld);
  CHECK(residual.cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(std::abs((rho * sld).trace()) <= 1e-14);
}

TEST_CASE("two-qubit SLD assembles from single-qubit blocks", "[estimation]") {
  // The L=2 Hamiltonian is block diagonal over {|00>,|11>} and {|01>,|10>}
  // with blocks -2(J sx + h sz) and -2 J sx.  Per block the Gibbs state is
  // the single-qubit family with a = -2 beta (J, 0, h); the reassembled SLD
  // needs the d(log w_block)/dJ identity shift from weight flow between the
  // blocks.
  const double J = 1.0, h = 1.0, beta = 1.0;
  const Eigen::Vector3d a1(-2 * beta * J, 0.0, -2 * beta * h);
  const Eigen::Vector3d da1(-2 * beta, 0.0, 0.0);
  const Eigen::Vector3d a2(-2 * beta * J, 0.0, 0.0);
  const Eigen::Vector3d da2(-2 * beta, 0.0, 0.0);

  const Eigen::Matrix2cd block1 = single_qubit_sld(a1, da1);
  const Eigen::Matrix2cd block2 = single_qubit_sld(a2, da2);

  const double mod1 = a1.norm(), mod2 = a2.norm();
  const double dmod1 = a1.dot(da1) / mod1, dmod2 = a2.dot(da2) / mod2;
  // d log Z_i = tanh(|a_i|) d|a_i|, Z_i = 2 cosh|a_i|
  const double z1 = 2 * std::cosh(mod1), z2 = 2 * std::cosh(mod2);
  const double dlogz1 = std::tanh(mod1) * dmod1, dlogz2 = std::tanh(mod2) * dmod2;
  const double dlogz_total = (z1 * dlogz1 + z2 * dlogz2) / (z1 + z2);
  const double shift1 = dlogz1 - dlogz_total;
  const double shift2 = dlogz2 - dlogz_total;

  ComplexMatrix assembled = ComplexMatrix::Zero(4, 4);
  const int b1[2] = {0, 3}, b2[2] = {1, 2};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      assembled(b1[r], b1[c]) = block1(r, c) + (r == c ? shift1 : 0.0);
      assembled(b2[r], b2[c]) = block2(r, c) + (r == c ? shift2 : 0.0);
    }

  const auto sld = sld_at(2, J, h, beta);
  CHECK((sld.matrix - assembled).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("degenerate energies with unequal weights are rejected", "[estimation]") {
  // not reachable from gibbs_state; signals an inconsistent hand-built state
  SpectralState state;
  state.energies = (RealVector(3) << -1.0, -1.0, 1.0).finished();
  state.vectors = ComplexMatrix::Identity(3, 3);
  state.weights = (RealVector(3) << 0.5, 0.3, 0.2).finished();
  state.beta = 1.0;
  ComplexMatrix dH = ComplexMatrix::Zero(3, 3);
  dH(0, 1) = dH(1, 0) = 1.0;
  CHECK_THROWS_AS(qfi_spectral(state, dH), DegeneracyError);
}

TEST_CASE("qsnr is scale invariant at the critical field", "[estimation]") {
  // Q = J^2 G = 1/4 at T = 0, h = J for L = 2, independent of J
  for (const double J : {0.2, 1.0, 7.0}) {
    const auto g = qfi_at(2, J, J, kInf);
    CHECK(qsnr(J, g) == Catch::Approx(0.25).epsilon(1e-10));
  }
  CHECK(qsnr(2.0, QFIValue{}) == 0.0);
  CHECK_THROWS_AS(qsnr(-1.0, QFIValue{}), DomainError);
}

TEST_CASE("optimal field sits at h = J for small chains at T = 0", "[estimation]") {
  for (const int L : {2, 3, 4}) {
    const double J = 1.0;
    auto objective = [&](double h) { return qfi_at(L, J, h, kInf).value; };
    const auto peak = maximize_on_range(objective, 0.0, 3.0 * J);
    INFO("L=" << L);
    CHECK(std::abs(peak.position - J) <= 1e-6);
  }
}

TEST_CASE("fidelity of a state with itself is one", "[estimation]") {
  SpinChainParams p{2, 1.0, 1.0, 1.0};
  CHECK(uhlmann_fidelity(p, p) == Catch::Approx(1.0).margin(1e-14));
  // distinct temperatures give strictly smaller fidelity
  SpinChainParams q = p;
  q.beta = 2.0;
  CHECK(uhlmann_fidelity(p, q) < 1.0);
}

TEST_CASE("Bures finite-difference oracle agrees with the spectral QFI", "[estimation]") {
  {
    SpinChainParams p{2, 1.0, 1.0, 1.0};
    const double oracle = bures_qfi_oracle(p);
    const double spectral = qfi_at(2, 1.0, 1.0, 1.0).value;
    CHECK(std::abs(oracle - spectral) <= 1e-4 * spectral);
  }
  {
    SpinChainParams p{3, 2.0, 2.0, 10.0};
    const double oracle = bures_qfi_oracle(p);
    const double spectral = qfi_at(3, 2.0, 2.0, 10.0).value;
    CHECK(std::abs(oracle - spectral) <= 1e-4 * spectral);
  }
}

TEST_CASE("Bures oracle across an (L, J, h, beta) grid within 1e-3", "[estimation]") {
  for (const int L : {2, 3}) {
    for (const double J : {0.7, 1.5}) {
      for (const double h : {0.5, 1.0, 2.0}) {
        for (const double beta : {0.7, 3.0, 10.0}) {
          SpinChainParams p{L, J * 1.0, h * J, beta};
          const double spectral = qfi_at(L, p.coupling, p.field, beta).value;
          const double oracle = bures_qfi_oracle(p);
          INFO("L=" << L << " J=" << p.coupling << " h=" << p.field << " beta=" << beta);
          CHECK(std::abs(oracle - spectral) <= 1e-3 * spectral);
        }
      }
    }
  }
}

TEST_CASE("Bures oracle rejects steps below the precision floor", "[estimation]") {
  SpinChainParams p{2, 1.0, 1.0, 1.0};
  CHECK_THROWS_AS(bures_qfi_oracle(p, 1e-10), StepSizeError);
}

TEST_CASE("Bures oracle at zero temperature matches the pure-state QFI", "[estimation]") {
  // ground-state overlap fidelity reduces to |<g(J)|g(J+dJ)>|^2
  SpinChainParams p{3, 1.0, 1.3, kInf};
  const double oracle = bures_qfi_oracle(p);
  const double pure = qfi_pure_state(gibbs_state(p), d_hamiltonian_dJ(p)).value;
  CHECK(std::abs(oracle - pure) <= 1e-4 * pure);
}
