// Practical estimation of J through total-magnetization measurements:
// the M_z POVM, outcome statistics p(m|J), classical Fisher information,
// Monte-Carlo simulated experiments and Bayesian inference on a coupling
// grid.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qfisher/common.hpp"
#include "qfisher/estimation.hpp"
#include "qfisher/optimize.hpp"
#include "qfisher/rng.hpp"
#include "qfisher/spin_chain.hpp"

namespace qfisher {

// ---------------------------------------------------------------------------
// Projective measurement of M_z = (1/L) sum_i sigma^z_i.  Outcomes are
// m = (L - 2j)/L for j = 0..L flipped spins; each projector is diagonal in
// the computational basis, so it is stored as a 0/1 diagonal mask.
// ---------------------------------------------------------------------------
struct MagnetizationPOVM {
  int sites = 0;
  std::vector<double> outcomes;       // descending in m
  std::vector<RealVector> masks;      // diagonal of each projector

  ComplexMatrix projector(std::size_t index) const {
    return masks.at(index).cast<std::complex<double>>().asDiagonal();
  }
  std::size_t size() const { return outcomes.size(); }
};

inline MagnetizationPOVM build_povm(int sites, int site_cap = default_site_cap) {
  detail::check_chain_size(sites, site_cap);
  const std::int64_t dim = std::int64_t{1} << sites;
  MagnetizationPOVM povm;
  povm.sites = sites;
  povm.outcomes.resize(sites + 1);
  povm.masks.assign(sites + 1, RealVector::Zero(dim));
  for (int j = 0; j <= sites; ++j)
    povm.outcomes[j] = static_cast<double>(sites - 2 * j) / sites;
  for (std::int64_t s = 0; s < dim; ++s) {
    const int j = __builtin_popcountll(static_cast<unsigned long long>(s));
    povm.masks[j][s] = 1.0;
  }
  return povm;
}

// ---------------------------------------------------------------------------
// p(m|J) = Tr(rho P_m) for the Gibbs state at the given parameters.
// ---------------------------------------------------------------------------
struct OutcomeDistribution {
  std::vector<double> outcomes;
  RealVector probs;
};

inline OutcomeDistribution outcome_distribution(const SpectralState &state,
                                                const MagnetizationPOVM &povm) {
  const auto dim = state.vectors.rows();
  if (povm.masks.empty() || povm.masks.front().size() != dim)
    throw DomainError("outcome_distribution: POVM dimension mismatch");
  // diag(rho)_s = sum_n w_n |V_sn|^2
  const RealVector rho_diag =
      (state.vectors.cwiseAbs2() * state.weights).cwiseMax(0.0);
  OutcomeDistribution dist;
  dist.outcomes = povm.outcomes;
  dist.probs.resize(povm.size());
  for (std::size_t m = 0; m < povm.size(); ++m)
    dist.probs[m] = std::min(1.0, std::max(0.0, povm.masks[m].dot(rho_diag)));
  const double total = dist.probs.sum();
  if (std::abs(total - 1.0) > 1e-14) dist.probs /= total;
  return dist;
}

inline OutcomeDistribution outcome_distribution(const SpinChainParams &params,
                                                const MagnetizationPOVM &povm,
                                                int site_cap = default_site_cap) {
  return outcome_distribution(gibbs_state(params, site_cap), povm);
}

enum class FisherMode { analytic, finite_difference };

// Classical Fisher information F = sum_m p(m|J) [d log p(m|J)]^2 of the
// magnetization measurement.  The analytic mode pushes the exact d rho/dJ
// through the projectors; the finite-difference mode exists as a testing
// fallback only.
inline double classical_fisher(const SpinChainParams &params, const MagnetizationPOVM &povm,
                               FisherMode mode = FisherMode::analytic,
                               int site_cap = default_site_cap) {
  params.validate();
  constexpr double probability_floor = 1e-15;
  RealVector probs, dprobs;
  if (mode == FisherMode::finite_difference) {
    const double step = 1e-6 * params.coupling;
    SpinChainParams lo = params, hi = params;
    lo.coupling -= step;
    hi.coupling += step;
    const RealVector p_lo = outcome_distribution(lo, povm, site_cap).probs;
    const RealVector p_hi = outcome_distribution(hi, povm, site_cap).probs;
    probs = outcome_distribution(params, povm, site_cap).probs;
    dprobs = (p_hi - p_lo) / (2.0 * step);
  } else {
    const SpectralState state = gibbs_state(params, site_cap);
    if (state.zero_temperature()) {
      const auto n = state.energies.size();
      const double range = std::max(state.energies[n - 1] - state.energies[0], 1e-300);
      if (state.energies[1] - state.energies[0] <= default_degeneracy_rtol * range)
        throw DegeneracyError("classical_fisher: degenerate ground state at T = 0");
    }
    const ComplexMatrix dH = d_hamiltonian_dJ(params, site_cap);
    const ComplexMatrix deriv_eig = state_derivative_eigenbasis(state, dH);
    // diag of d rho in the computational basis
    const RealVector drho_diag = (state.vectors * deriv_eig)
                                     .cwiseProduct(state.vectors.conjugate())
                                     .rowwise()
                                     .sum()
                                     .real();
    probs = outcome_distribution(state, povm).probs;
    dprobs.resize(povm.size());
    for (std::size_t m = 0; m < povm.size(); ++m)
      dprobs[m] = povm.masks[m].dot(drho_diag);
  }
  double fisher = 0;
  bool any = false;
  for (Eigen::Index m = 0; m < probs.size(); ++m) {
    if (probs[m] <= probability_floor) continue;  // zero-probability outcomes skipped
    any = true;
    fisher += dprobs[m] * dprobs[m] / probs[m];
  }
  if (!any) throw DomainError("classical_fisher: degenerate outcome distribution");
  return fisher;
}

// ---------------------------------------------------------------------------
// Monte-Carlo simulated experiments: M independent categorical draws from
// p(m|J*), bit-reproducible under the given seed.
// ---------------------------------------------------------------------------
struct ExperimentRecord {
  double true_coupling = 0;
  std::uint64_t measurements = 0;
  std::vector<std::uint64_t> counts;  // per outcome index
  std::uint64_t seed = 0;
};

inline ExperimentRecord sample_experiment(const OutcomeDistribution &dist, double true_coupling,
                                          std::uint64_t measurements, std::uint64_t seed) {
  if (measurements < 1) throw DomainError("sample_experiment: need at least one measurement");
  ExperimentRecord record;
  record.true_coupling = true_coupling;
  record.measurements = measurements;
  record.seed = seed;
  record.counts.assign(dist.probs.size(), 0);
  std::vector<double> cumulative(dist.probs.size());
  double acc = 0;
  for (Eigen::Index m = 0; m < dist.probs.size(); ++m) {
    acc += dist.probs[m];
    cumulative[m] = acc;
  }
  Xoshiro256 rng(seed);
  const std::size_t last = cumulative.size() - 1;
  for (std::uint64_t draw = 0; draw < measurements; ++draw) {
    const double u = rng.next_double() * acc;
    std::size_t idx = 0;
    while (idx < last && cumulative[idx] <= u) ++idx;
    ++record.counts[idx];
  }
  return record;
}

// ---------------------------------------------------------------------------
// Bayesian inference with a flat prior on [j_min, j_max]: the posterior is
// accumulated in log space, shifted by its maximum before exponentiation and
// trapezoid-normalized; moments come from trapezoid quadrature.
// ---------------------------------------------------------------------------
struct PosteriorGridSpec {
  double j_min = 0;
  double j_max = 0;
  int points = 4001;
};

struct PosteriorGrid {
  RealVector grid;
  RealVector density;
  double mean = 0;
  double variance = 0;

  // central credible interval from the trapezoid CDF
  std::pair<double, double> credible_interval(double mass = 0.95) const {
    const auto n = grid.size();
    RealVector cdf = RealVector::Zero(n);
    for (Eigen::Index i = 1; i < n; ++i)
      cdf[i] = cdf[i - 1] + 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
    const double total = cdf[n - 1];
    auto quantile = [&](double q) {
      const double target = q * total;
      Eigen::Index i = 1;
      while (i < n - 1 && cdf[i] < target) ++i;
      const double span = cdf[i] - cdf[i - 1];
      const double frac = span > 0 ? (target - cdf[i - 1]) / span : 0.5;
      return grid[i - 1] + frac * (grid[i] - grid[i - 1]);
    };
    const double tail = 0.5 * (1.0 - mass);
    return {quantile(tail), quantile(1.0 - tail)};
  }
};

using OutcomeModel = std::function<OutcomeDistribution(double)>;

namespace detail {

inline PosteriorGrid posterior_from_log_weights(const OutcomeModel &model,
                                                const RealVector &counts,
                                                const PosteriorGridSpec &spec) {
  if (!(spec.j_max > spec.j_min) || spec.points < 5)
    throw DomainError("posterior: bad grid specification");
  PosteriorGrid post;
  post.grid = RealVector::LinSpaced(spec.points, spec.j_min, spec.j_max);
  RealVector loglik = RealVector::Zero(spec.points);
  for (int i = 0; i < spec.points; ++i) {
    const OutcomeDistribution dist = model(post.grid[i]);
    double acc = 0;
    for (Eigen::Index m = 0; m < counts.size(); ++m) {
      if (counts[m] == 0) continue;
      acc += counts[m] * std::log(std::max(dist.probs[m], 1e-300));
    }
    loglik[i] = acc;
  }
  loglik.array() -= loglik.maxCoeff();
  post.density = loglik.array().exp();

  const double step = post.grid[1] - post.grid[0];
  auto trapezoid = [&](const RealVector &values) {
    double total = values.sum() - 0.5 * (values[0] + values[values.size() - 1]);
    return total * step;
  };
  const double norm = trapezoid(post.density);
  if (!(norm > 0)) throw DomainError("posterior: vanishing likelihood on the grid");
  post.density /= norm;

  // boundary-mass guard: > 1% of posterior mass in the outer 2 bins.
  // Needs O(1000) grid points so that a flat posterior stays well below
  // the threshold.
  const auto n = post.density.size();
  const double left = 0.5 * (post.density[0] + post.density[1]) * step +
                      0.5 * (post.density[1] + post.density[2]) * step;
  const double right = 0.5 * (post.density[n - 1] + post.density[n - 2]) * step +
                       0.5 * (post.density[n - 2] + post.density[n - 3]) * step;
  if (left + right > 0.01)
    throw GridError("posterior: mass concentrated at the grid boundary, widen the prior");

  post.mean = trapezoid(post.density.cwiseProduct(post.grid));
  const RealVector centered = post.grid.array() - post.mean;
  post.variance = trapezoid(post.density.cwiseProduct(centered.cwiseAbs2()));
  return post;
}

}  // namespace detail

// Posterior from observed counts, p(J|{m}) ~ prod_m p(m|J)^{n_m}.
inline PosteriorGrid posterior(const ExperimentRecord &record, const OutcomeModel &model,
                               const PosteriorGridSpec &spec) {
  if (!(record.true_coupling >= spec.j_min && record.true_coupling <= spec.j_max))
    throw DomainError("posterior: grid does not cover the true coupling");
  RealVector counts(record.counts.size());
  for (std::size_t m = 0; m < record.counts.size(); ++m)
    counts[m] = static_cast<double>(record.counts[m]);
  return detail::posterior_from_log_weights(model, counts, spec);
}

// Asymptotic posterior with n_m -> M p(m|J*):
// p_a(J) ~ exp[M sum_m p(m|J*) log p(m|J)].
inline PosteriorGrid asymptotic_posterior(double true_coupling, const OutcomeModel &model,
                                          double measurements, const PosteriorGridSpec &spec) {
  if (!(true_coupling >= spec.j_min && true_coupling <= spec.j_max))
    throw DomainError("asymptotic_posterior: grid does not cover the true coupling");
  const OutcomeDistribution truth = model(true_coupling);
  return detail::posterior_from_log_weights(model, measurements * truth.probs, spec);
}

// ---------------------------------------------------------------------------
// Magnetization-vs-optimal efficiency summary.  For each coupling: the field
// h~ maximizing the Fisher information, the field h* maximizing the QFI, the
// ratio F(h~)/G(h*), and the temperature ratio delta = F(beta)/F(inf) at h~
// together with its maximum over the scanned field range.
// ---------------------------------------------------------------------------
struct EfficiencyRow {
  int sites = 0;
  double coupling = 0;
  double beta = 0;
  double h_fisher = 0;      // h~
  double fisher_max = 0;    // F(h~)
  double h_qfi = 0;         // h*
  double qfi_max = 0;       // G(h*)
  double ratio = 0;         // F(h~)/G(h*)
  double delta_at_h = 0;    // F(beta, h~)/F(inf, h~)
  double delta_max = 0;     // max over the field scan
  double h_at_delta_max = 0;
};

inline std::vector<EfficiencyRow> efficiency_report(int sites,
                                                    const std::vector<double> &betas,
                                                    const std::vector<double> &couplings,
                                                    double h_max_factor = 3.0,
                                                    int scan_points = 400,
                                                    int site_cap = default_site_cap) {
  const MagnetizationPOVM povm = build_povm(sites, site_cap);
  std::vector<EfficiencyRow> rows;
  rows.reserve(betas.size() * couplings.size());
  for (const double coupling : couplings) {
    for (const double beta : betas) {
      auto fisher_at = [&](double h, double b) {
        SpinChainParams p{sites, coupling, h, b};
        return classical_fisher(p, povm, FisherMode::analytic, site_cap);
      };
      auto qfi_at = [&](double h) {
        SpinChainParams p{sites, coupling, h, beta};
        const SpectralState state = gibbs_state(p, site_cap);
        return qfi_spectral(state, d_hamiltonian_dJ(p, site_cap)).value;
      };
      EfficiencyRow row;
      row.sites = sites;
      row.coupling = coupling;
      row.beta = beta;
      const auto fisher_peak = maximize_on_range([&](double h) { return fisher_at(h, beta); },
                                                 0.0, h_max_factor * coupling, scan_points);
      const auto qfi_peak =
          maximize_on_range(qfi_at, 0.0, h_max_factor * coupling, scan_points);
      row.h_fisher = fisher_peak.position;
      row.fisher_max = fisher_peak.value;
      row.h_qfi = qfi_peak.position;
      row.qfi_max = qfi_peak.value;
      row.ratio = row.fisher_max / row.qfi_max;
      if (std::isinf(beta)) {
        row.delta_at_h = 1.0;
        row.delta_max = 1.0;
        row.h_at_delta_max = row.h_fisher;
      } else {
        row.delta_at_h = row.fisher_max / fisher_at(row.h_fisher,
                                                    std::numeric_limits<double>::infinity());
        row.delta_max = 0;
        const double step = h_max_factor * coupling / scan_points;
        for (int i = 1; i <= scan_points; ++i) {
          const double h = i * step;
          const double delta =
              fisher_at(h, beta) / fisher_at(h, std::numeric_limits<double>::infinity());
          if (delta > row.delta_max) {
            row.delta_max = delta;
            row.h_at_delta_max = h;
          }
        }
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace qfisher
