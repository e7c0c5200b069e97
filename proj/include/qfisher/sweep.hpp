// Sweep configuration, deterministic parallel execution and the task
// runners behind the CLI subcommands.  Every runner is an ordinary function
// returning a ResultTable (and, where applicable, a JSON summary), so the
// test suite drives the same code paths as the binary.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qfisher/common.hpp"
#include "qfisher/csv.hpp"
#include "qfisher/estimation.hpp"
#include "qfisher/fermion.hpp"
#include "qfisher/measurement.hpp"
#include "qfisher/spin_chain.hpp"
#include "qfisher/thermo_limit.hpp"

namespace qfisher {

inline constexpr double infinite = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Configuration.  Chain sizes and inverse temperatures admit the literal
// token "inf": L = inf routes to the thermodynamic-limit density, beta = inf
// to the zero-temperature paths.
// ---------------------------------------------------------------------------
struct SweepConfig {
  std::vector<double> sites{2};       // finite integers or inf
  std::vector<double> couplings{1};   // J
  std::vector<double> fields{1};      // h
  std::vector<double> betas{1};       // finite or inf
  std::uint64_t seed = 0;
  int threads = 1;
  int site_cap = default_site_cap;
  std::string out_path;
  std::string summary_path;

  // bayes-sim
  double true_coupling = 3.0;
  std::optional<double> bayes_field;  // default: field maximizing F
  std::vector<std::uint64_t> m_schedule{10, 20, 50, 100, 200, 300, 400, 500};
  int n_sets = 20;
  int grid_points = 4001;
  std::optional<std::pair<double, double>> prior;

  // scaling
  std::vector<int> sizes_list{64, 128, 256, 512};
};

namespace detail {

inline double parse_extended_number(const nlohmann::json &node, const std::string &field) {
  if (node.is_number()) return node.get<double>();
  if (node.is_string()) {
    const std::string s = node.get<std::string>();
    if (s == "inf" || s == "Inf" || s == "INF") return infinite;
    throw ConfigError("field '" + field + "': unrecognized token '" + s + "'");
  }
  throw ConfigError("field '" + field + "': expected number or \"inf\"");
}

inline std::vector<double> parse_axis(const nlohmann::json &node, const std::string &field) {
  std::vector<double> values;
  if (node.is_array()) {
    for (const auto &item : node) values.push_back(parse_extended_number(item, field));
  } else if (node.is_object()) {
    for (const char *key : {"min", "max", "step"})
      if (!node.contains(key) || !node[key].is_number())
        throw ConfigError("field '" + field + "': range needs numeric min/max/step");
    const double lo = node["min"].get<double>();
    const double hi = node["max"].get<double>();
    const double step = node["step"].get<double>();
    if (!(step > 0) || !std::isfinite(step))
      throw ConfigError("field '" + field + "': step must be positive and finite");
    if (hi < lo || !std::isfinite(lo) || !std::isfinite(hi))
      throw ConfigError("field '" + field + "': need finite min <= max");
    for (double x = lo; x <= hi + 0.5 * step; x += step) values.push_back(x);
  } else {
    values.push_back(parse_extended_number(node, field));
  }
  if (values.empty()) throw ConfigError("field '" + field + "': empty range");
  return values;
}

}  // namespace detail

inline void validate_config(const SweepConfig &config) {
  if (config.threads < 1) throw ConfigError("field 'threads': must be >= 1");
  if (config.n_sets < 1) throw ConfigError("field 'n_sets': must be >= 1");
  if (config.grid_points < 5) throw ConfigError("field 'grid_points': must be >= 5");
  if (config.sites.empty() || config.couplings.empty() || config.fields.empty() ||
      config.betas.empty())
    throw ConfigError("empty parameter axis");
  for (const double coupling : config.couplings)
    if (!(coupling > 0) || std::isinf(coupling))
      throw ConfigError("field 'J': couplings must be positive and finite");
  for (const double field : config.fields)
    if (!(field >= 0) || std::isinf(field))
      throw ConfigError("field 'h': fields must be nonnegative and finite");
  for (const double beta : config.betas)
    if (!(beta > 0)) throw ConfigError("field 'beta': values must be positive");
  for (const double length : config.sites) {
    if (std::isinf(length)) continue;
    if (length < 2 || length != std::floor(length))
      throw ConfigError("field 'L': chain sizes must be integers >= 2 or \"inf\"");
  }
  for (const std::uint64_t m : config.m_schedule)
    if (m < 1) throw ConfigError("field 'M_schedule': entries must be >= 1");
  if (config.prior && !(config.prior->second > config.prior->first && config.prior->first > 0))
    throw ConfigError("field 'prior': need 0 < min < max");
}

inline SweepConfig parse_config(const nlohmann::json &doc) {
  SweepConfig config;
  try {
    if (doc.contains("L")) config.sites = detail::parse_axis(doc["L"], "L");
    if (doc.contains("J")) config.couplings = detail::parse_axis(doc["J"], "J");
    if (doc.contains("h")) config.fields = detail::parse_axis(doc["h"], "h");
    if (doc.contains("beta")) config.betas = detail::parse_axis(doc["beta"], "beta");
    if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("threads")) config.threads = doc["threads"].get<int>();
    if (doc.contains("site_cap")) config.site_cap = doc["site_cap"].get<int>();
    if (doc.contains("out")) config.out_path = doc["out"].get<std::string>();
    if (doc.contains("summary")) config.summary_path = doc["summary"].get<std::string>();
    if (doc.contains("true_J")) config.true_coupling = doc["true_J"].get<double>();
    if (doc.contains("bayes_h")) config.bayes_field = doc["bayes_h"].get<double>();
    if (doc.contains("M_schedule")) {
      config.m_schedule.clear();
      for (const auto &m : doc["M_schedule"])
        config.m_schedule.push_back(m.get<std::uint64_t>());
    }
    if (doc.contains("n_sets")) config.n_sets = doc["n_sets"].get<int>();
    if (doc.contains("grid_points")) config.grid_points = doc["grid_points"].get<int>();
    if (doc.contains("prior")) {
      config.prior = std::make_pair(doc["prior"].at("min").get<double>(),
                                    doc["prior"].at("max").get<double>());
    }
    if (doc.contains("sizes")) {
      config.sizes_list.clear();
      for (const auto &s : doc["sizes"]) config.sizes_list.push_back(s.get<int>());
    }
  } catch (const nlohmann::json::exception &err) {
    throw ConfigError(std::string("config: ") + err.what());
  }
  validate_config(config);
  return config;
}

inline std::string config_hash(const SweepConfig &config, const std::string &task) {
  std::ostringstream blob;
  blob << task << '|';
  auto dump = [&blob](const std::vector<double> &values) {
    for (const double v : values) blob << format_extended(v) << ',';
    blob << ';';
  };
  dump(config.sites);
  dump(config.couplings);
  dump(config.fields);
  dump(config.betas);
  blob << config.seed << '|' << config.site_cap << '|' << config.true_coupling << '|'
       << config.n_sets << '|' << config.grid_points;
  for (const auto m : config.m_schedule) blob << ',' << m;
  for (const auto s : config.sizes_list) blob << ',' << s;
  if (config.prior) blob << '|' << config.prior->first << ':' << config.prior->second;
  if (config.bayes_field) blob << '|' << *config.bayes_field;
  char buffer[20];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(fnv1a64(blob.str())));
  return buffer;
}

// Work-stealing over independent grid points; results land in index order,
// so the emitted table does not depend on the thread count.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)> &body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int width = static_cast<int>(std::min<std::size_t>(threads, count));
  pool.reserve(width);
  for (int t = 0; t < width; ++t) pool.emplace_back(worker);
  for (auto &thread : pool) thread.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::vector<std::pair<std::string, std::string>> standard_metadata(
    const SweepConfig &config, const std::string &task) {
  return {{"tool", std::string("qfisher ") + version_string},
          {"task", task},
          {"config-hash", config_hash(config, task)},
          {"seed", std::to_string(config.seed)}};
}

// ---------------------------------------------------------------------------
// qfi-scan: G_J per (L, J, h, beta).  Exact diagonalization for L <= cap,
// fermionic momentum sums for larger even L, thermodynamic-limit density for
// L = inf.  When the beta list carries the inf baseline, a gamma column
// reports G(beta)/G(inf) for the finite-beta rows.
// ---------------------------------------------------------------------------
inline ResultTable run_qfi_scan(const SweepConfig &config) {
  struct Point {
    double length, coupling, field;
  };
  std::vector<Point> points;
  for (const double length : config.sites)
    for (const double coupling : config.couplings)
      for (const double field : config.fields) points.push_back({length, coupling, field});

  const bool has_baseline =
      std::any_of(config.betas.begin(), config.betas.end(),
                  [](double beta) { return std::isinf(beta); });

  struct Cell {
    QFIValue qfi;
    std::string backend;
    std::string error;
  };
  std::vector<std::vector<Cell>> results(points.size());

  parallel_for(points.size(), config.threads, [&](std::size_t index) {
    const auto &[length, coupling, field] = points[index];
    auto &cells = results[index];
    cells.resize(config.betas.size());

    if (std::isinf(length)) {
      for (std::size_t b = 0; b < config.betas.size(); ++b) {
        cells[b].backend = "thermo-limit";
        try {
          if (std::isinf(config.betas[b])) {
            const double density = gtilde_zero_temperature(coupling, field);
            cells[b].qfi = QFIValue{density, 0.0, density};
          } else {
            const QfiDensity density = gtilde_quadrature(coupling, field, config.betas[b]);
            cells[b].qfi = QFIValue{density.total(), density.g1, density.g2};
          }
        } catch (const Error &err) {
          cells[b].error = err.what();
        }
      }
      return;
    }

    const int sites = static_cast<int>(length);
    if (sites <= config.site_cap) {
      ComplexMatrix hamiltonian, coupling_derivative;
      try {
        SpinChainParams params{sites, coupling, field, 1.0};
        hamiltonian = build_hamiltonian(params, config.site_cap);
        coupling_derivative = d_hamiltonian_dJ(params, config.site_cap);
      } catch (const Error &err) {
        for (auto &cell : cells) {
          cell.backend = "spin-exact";
          cell.error = err.what();
        }
        return;
      }
      for (std::size_t b = 0; b < config.betas.size(); ++b) {
        cells[b].backend = "spin-exact";
        try {
          const SpectralState state = gibbs_state(hamiltonian, config.betas[b]);
          cells[b].qfi = qfi_spectral(state, coupling_derivative);
        } catch (const Error &err) {
          cells[b].error = err.what();
        }
      }
      return;
    }

    for (std::size_t b = 0; b < config.betas.size(); ++b) {
      cells[b].backend = "fermion";
      try {
        cells[b].qfi = std::isinf(config.betas[b])
                           ? qfi_zero_temperature_sum(sites, coupling, field)
                           : qfi_finite_temperature_sum(sites, coupling, field,
                                                        config.betas[b]);
      } catch (const Error &err) {
        cells[b].error = err.what();
      }
    }
  });

  ResultTable table;
  table.metadata = standard_metadata(config, "qfi-scan");
  table.columns = {"L", "J", "h", "beta", "G", "G1", "G2", "gamma", "backend", "error"};
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto &[length, coupling, field] = points[p];
    std::optional<double> baseline;
    if (has_baseline) {
      for (std::size_t b = 0; b < config.betas.size(); ++b)
        if (std::isinf(config.betas[b]) && results[p][b].error.empty())
          baseline = results[p][b].qfi.value;
    }
    for (std::size_t b = 0; b < config.betas.size(); ++b) {
      const Cell &cell = results[p][b];
      std::vector<std::string> row{format_extended(length), format_double(coupling),
                                   format_double(field), format_extended(config.betas[b])};
      if (cell.error.empty()) {
        row.push_back(format_double(cell.qfi.value));
        row.push_back(format_double(cell.qfi.classical_part));
        row.push_back(format_double(cell.qfi.quantum_part));
        const bool finite_beta = !std::isinf(config.betas[b]);
        if (finite_beta && baseline && *baseline > 0)
          row.push_back(format_double(cell.qfi.value / *baseline));
        else
          row.emplace_back();
        row.push_back(cell.backend);
        row.emplace_back();
      } else {
        row.insert(row.end(), {"", "", "", "", cell.backend, cell.error});
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// optimal-field: h* maximizing G over h in (0, 3J] per (L, J, beta), with
// the QSNR at the peak.  Records which backend produced each row.
// ---------------------------------------------------------------------------
inline ResultTable run_optimal_field(const SweepConfig &config) {
  struct Point {
    double length, coupling, beta;
  };
  std::vector<Point> points;
  for (const double length : config.sites)
    for (const double coupling : config.couplings)
      for (const double beta : config.betas) points.push_back({length, coupling, beta});

  struct Cell {
    double h_star = 0, qfi = 0, snr = 0;
    std::string backend, error;
  };
  std::vector<Cell> cells(points.size());

  parallel_for(points.size(), config.threads, [&](std::size_t index) {
    const auto &[length, coupling, beta] = points[index];
    Cell &cell = cells[index];
    try {
      if (std::isinf(length)) {
        cell.backend = "thermo-limit";
        if (std::isinf(beta))
          throw RegimeError("zero-temperature thermodynamic density diverges at h = J");
        const double resolution = 1e-3 * coupling;
        const CuspScan scan =
            cusp_scan(coupling, beta, 0.5 * coupling, 1.5 * coupling, resolution);
        auto density = [&](double h) {
          return gtilde_quadrature(coupling, h, beta).total();
        };
        double peak = scan.peak_field;
        try {
          peak = bisect_slope_sign_change(density, peak - 2 * resolution,
                                          peak + 2 * resolution, 1e-6 * coupling,
                                          1e-7 * coupling);
        } catch (const ScanRangeError &) {
          // slopes did not bracket (flat top at this resolution); keep the scan value
        }
        cell.h_star = peak;
        cell.qfi = density(peak);
      } else {
        const int sites = static_cast<int>(length);
        if (sites <= config.site_cap) {
          cell.backend = "spin-exact";
          SpinChainParams base{sites, coupling, 1.0, beta};
          const ComplexMatrix coupling_derivative =
              d_hamiltonian_dJ(base, config.site_cap);
          auto objective = [&](double h) {
            SpinChainParams params{sites, coupling, h, beta};
            const SpectralState state = gibbs_state(params, config.site_cap);
            return qfi_spectral(state, coupling_derivative).value;
          };
          const PeakResult peak = maximize_on_range(objective, 0.0, 3.0 * coupling);
          cell.h_star = peak.position;
          cell.qfi = peak.value;
        } else {
          cell.backend = "fermion";
          cell.h_star = pseudo_critical_field(sites, coupling, beta);
          cell.qfi = std::isinf(beta)
                         ? qfi_zero_temperature_sum(sites, coupling, cell.h_star).value
                         : qfi_finite_temperature_sum(sites, coupling, cell.h_star, beta)
                               .value;
        }
      }
      cell.snr = coupling * coupling * cell.qfi;
    } catch (const Error &err) {
      cell.error = err.what();
    }
  });

  ResultTable table;
  table.metadata = standard_metadata(config, "optimal-field");
  table.columns = {"L", "J", "beta", "h_star", "G_at_h_star", "Q", "backend", "error"};
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto &[length, coupling, beta] = points[p];
    const Cell &cell = cells[p];
    std::vector<std::string> row{format_extended(length), format_double(coupling),
                                 format_extended(beta)};
    if (cell.error.empty()) {
      row.push_back(format_double(cell.h_star));
      row.push_back(format_double(cell.qfi));
      row.push_back(format_double(cell.snr));
      row.push_back(cell.backend);
      row.emplace_back();
    } else {
      row.insert(row.end(), {"", "", "", cell.backend, cell.error});
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// sld-dump: the SLD matrix with diagnostics as JSON.  At L = 2, T = 0 the
// two-qubit closed form
//   Lambda = h/(2 (J^2+h^2)^{3/2}) [ h (XX - YY) - J (Z1 + 1Z) ]
// is emitted alongside the residual against the spectral construction.
// ---------------------------------------------------------------------------
inline nlohmann::json run_sld_dump(const SpinChainParams &params,
                                   int site_cap = default_site_cap) {
  params.validate();
  const ComplexMatrix hamiltonian = build_hamiltonian(params, site_cap);
  const ComplexMatrix coupling_derivative = d_hamiltonian_dJ(params, site_cap);
  const SpectralState state = gibbs_state(hamiltonian, params.beta);
  const SLDOperator sld = sld_spectral(state, coupling_derivative);
  const QFIValue qfi = qfi_spectral(state, coupling_derivative);

  nlohmann::json doc;
  doc["L"] = params.sites;
  doc["J"] = params.coupling;
  doc["h"] = params.field;
  doc["beta"] = params.zero_temperature() ? nlohmann::json("inf")
                                          : nlohmann::json(params.beta);
  const auto dim = sld.matrix.rows();
  doc["dim"] = dim;
  nlohmann::json real_rows = nlohmann::json::array();
  nlohmann::json imag_rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < dim; ++r) {
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (Eigen::Index c = 0; c < dim; ++c) {
      re.push_back(sld.matrix(r, c).real());
      im.push_back(sld.matrix(r, c).imag());
    }
    real_rows.push_back(std::move(re));
    imag_rows.push_back(std::move(im));
  }
  doc["sld_real"] = std::move(real_rows);
  doc["sld_imag"] = std::move(imag_rows);

  nlohmann::json diag;
  diag["hermiticity_defect"] = (sld.matrix - sld.matrix.adjoint()).cwiseAbs().maxCoeff();
  diag["trace_rho_sld"] = trace_rho_op(state, sld.matrix);
  diag["trace_rho_sld_squared"] = trace_rho_op_squared(state, sld.matrix);
  diag["qfi"] = qfi.value;
  doc["diagnostics"] = std::move(diag);

  if (params.sites == 2 && params.zero_temperature()) {
    const double j = params.coupling, h = params.field;
    const double omega = std::sqrt(j * j + h * h);
    const double scale = h / (2.0 * omega * omega * omega);
    ComplexMatrix closed = ComplexMatrix::Zero(4, 4);
    closed(0, 3) = closed(3, 0) = scale * 2.0 * h;  // h (XX - YY) on {|00>,|11>}
    closed(0, 0) = -scale * 2.0 * j;                // -J (Z1 + 1Z)
    closed(3, 3) = scale * 2.0 * j;
    doc["closed_form_residual"] = (sld.matrix - closed).cwiseAbs().maxCoeff();
  }
  return doc;
}

// ---------------------------------------------------------------------------
// fisher-mag: magnetization-measurement efficiency table.
// ---------------------------------------------------------------------------
inline ResultTable run_fisher_mag(const SweepConfig &config) {
  struct Item {
    int sites;
    double coupling, beta;
  };
  std::vector<Item> items;
  for (const double length : config.sites) {
    if (std::isinf(length))
      throw ConfigError("field 'L': fisher-mag needs finite chain sizes");
    for (const double coupling : config.couplings)
      for (const double beta : config.betas)
        items.push_back({static_cast<int>(length), coupling, beta});
  }
  struct Cell {
    EfficiencyRow row{};
    std::string error;
  };
  std::vector<Cell> cells(items.size());
  parallel_for(items.size(), config.threads, [&](std::size_t index) {
    const auto &item = items[index];
    try {
      cells[index].row = efficiency_report(item.sites, {item.beta}, {item.coupling}, 3.0,
                                           400, config.site_cap)
                             .front();
    } catch (const Error &err) {
      cells[index].error = err.what();
    }
  });

  ResultTable table;
  table.metadata = standard_metadata(config, "fisher-mag");
  table.columns = {"L",     "J",          "beta",      "h_tilde",        "F_at_h_tilde",
                   "h_star", "G_at_h_star", "ratio",    "delta_at_h_tilde", "delta_max",
                   "h_at_delta_max", "error"};
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto &item = items[i];
    const Cell &cell = cells[i];
    std::vector<std::string> row{std::to_string(item.sites), format_double(item.coupling),
                                 format_extended(item.beta)};
    if (cell.error.empty()) {
      const EfficiencyRow &r = cell.row;
      for (const double v : {r.h_fisher, r.fisher_max, r.h_qfi, r.qfi_max, r.ratio,
                             r.delta_at_h, r.delta_max, r.h_at_delta_max})
        row.push_back(format_double(v));
      row.emplace_back();
    } else {
      row.insert(row.end(), {"", "", "", "", "", "", "", "", cell.error});
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// bayes-sim: Monte-Carlo campaign of magnetization measurements with
// Bayesian inference.  Per M in the schedule: mean posterior variance over
// n_sets experiments, the asymptotic-posterior variance and the Cramer-Rao
// bound 1/(M F).  Per-experiment streams derive from (seed, experiment
// index), so results are independent of the thread count.
// ---------------------------------------------------------------------------
struct BayesCampaign {
  ResultTable table;
  nlohmann::json summary;
};

inline BayesCampaign run_bayes_sim(const SweepConfig &config) {
  if (config.sites.empty() || std::isinf(config.sites.front()))
    throw ConfigError("field 'L': bayes-sim needs a finite chain size");
  const int sites = static_cast<int>(config.sites.front());
  const double beta = config.betas.front();
  const double true_coupling = config.true_coupling;
  if (!(true_coupling > 0)) throw ConfigError("field 'true_J': must be positive");

  const MagnetizationPOVM povm = build_povm(sites, config.site_cap);
  double field;
  if (config.bayes_field) {
    field = *config.bayes_field;
  } else {
    // default working point: the field maximizing the Fisher information
    field = maximize_on_range(
                [&](double h) {
                  SpinChainParams p{sites, true_coupling, h, beta};
                  return classical_fisher(p, povm, FisherMode::analytic, config.site_cap);
                },
                0.0, 3.0 * true_coupling)
                .position;
  }
  SpinChainParams truth{sites, true_coupling, field, beta};
  const double fisher = classical_fisher(truth, povm, FisherMode::analytic, config.site_cap);
  const OutcomeDistribution true_dist = outcome_distribution(truth, povm, config.site_cap);

  PosteriorGridSpec spec;
  spec.j_min = config.prior ? config.prior->first : true_coupling / 4.0;
  spec.j_max = config.prior ? config.prior->second : true_coupling * 4.0;
  spec.points = config.grid_points;

  auto tabulate = [&](const PosteriorGridSpec &grid_spec) {
    std::vector<OutcomeDistribution> table(grid_spec.points);
    RealVector grid = RealVector::LinSpaced(grid_spec.points, grid_spec.j_min, grid_spec.j_max);
    parallel_for(grid_spec.points, config.threads, [&](std::size_t i) {
      SpinChainParams p{sites, grid[static_cast<Eigen::Index>(i)], field, beta};
      table[i] = outcome_distribution(p, povm, config.site_cap);
    });
    const double step = grid[1] - grid[0];
    const double lo = grid_spec.j_min;
    auto shared = std::make_shared<std::vector<OutcomeDistribution>>(std::move(table));
    return OutcomeModel([shared, lo, step, n = grid_spec.points](double J) {
      auto index = static_cast<std::size_t>(std::llround((J - lo) / step));
      if (index >= static_cast<std::size_t>(n))
        throw DomainError("bayes-sim model: coupling off the tabulated grid");
      return (*shared)[index];
    });
  };
  OutcomeModel model = tabulate(spec);

  // one-shot widened retry shared by all experiments
  PosteriorGridSpec wide = spec;
  const double center = 0.5 * (spec.j_min + spec.j_max);
  const double half = 0.5 * (spec.j_max - spec.j_min);
  wide.j_min = std::max(1e-6, center - 2.0 * half);
  wide.j_max = center + 2.0 * half;
  std::optional<OutcomeModel> wide_model;
  std::mutex wide_mutex;

  struct Row {
    std::uint64_t measurements = 0;
    double mean_variance = 0, asymptotic_variance = 0, cr_bound = 0;
    std::string error;
  };
  std::vector<Row> rows(config.m_schedule.size());
  std::vector<std::vector<double>> variances(config.m_schedule.size());
  for (auto &v : variances) v.assign(config.n_sets, 0.0);
  std::vector<std::string> experiment_errors(config.m_schedule.size() * config.n_sets);

  parallel_for(config.m_schedule.size() * config.n_sets, config.threads,
               [&](std::size_t index) {
                 const std::size_t m_index = index / config.n_sets;
                 const std::size_t set_index = index % config.n_sets;
                 const std::uint64_t m = config.m_schedule[m_index];
                 const std::uint64_t stream = derive_stream_seed(config.seed, index);
                 const ExperimentRecord record =
                     sample_experiment(true_dist, true_coupling, m, stream);
                 try {
                   variances[m_index][set_index] = posterior(record, model, spec).variance;
                 } catch (const GridError &) {
                   try {
                     OutcomeModel retry_model;
                     {
                       std::lock_guard<std::mutex> lock(wide_mutex);
                       if (!wide_model) wide_model = tabulate(wide);
                       retry_model = *wide_model;
                     }
                     variances[m_index][set_index] =
                         posterior(record, retry_model, wide).variance;
                   } catch (const Error &err) {
                     experiment_errors[index] = err.what();
                   }
                 }
               });

  for (std::size_t m_index = 0; m_index < config.m_schedule.size(); ++m_index) {
    Row &row = rows[m_index];
    row.measurements = config.m_schedule[m_index];
    for (int s = 0; s < config.n_sets; ++s) {
      const std::string &err = experiment_errors[m_index * config.n_sets + s];
      if (!err.empty()) {
        row.error = err;
        break;
      }
    }
    if (!row.error.empty()) continue;
    double sum = 0;
    for (const double v : variances[m_index]) sum += v;
    row.mean_variance = sum / config.n_sets;
    row.cr_bound = 1.0 / (row.measurements * fisher);
    try {
      row.asymptotic_variance =
          asymptotic_posterior(true_coupling, model,
                               static_cast<double>(row.measurements), spec)
              .variance;
    } catch (const Error &err) {
      row.error = err.what();
    }
  }

  BayesCampaign out;
  out.table.metadata = standard_metadata(config, "bayes-sim");
  out.table.columns = {"M", "mean_bayes_variance", "asymptotic_variance",
                       "cr_bound", "n_sets", "error"};
  for (const Row &row : rows) {
    std::vector<std::string> cells{std::to_string(row.measurements)};
    if (row.error.empty()) {
      cells.push_back(format_double(row.mean_variance));
      cells.push_back(format_double(row.asymptotic_variance));
      cells.push_back(format_double(row.cr_bound));
      cells.push_back(std::to_string(config.n_sets));
      cells.emplace_back();
    } else {
      cells.insert(cells.end(), {"", "", "", std::to_string(config.n_sets), row.error});
    }
    out.table.rows.push_back(std::move(cells));
  }

  out.summary["task"] = "bayes-sim";
  out.summary["L"] = sites;
  out.summary["beta"] = std::isinf(beta) ? nlohmann::json("inf") : nlohmann::json(beta);
  out.summary["true_J"] = true_coupling;
  out.summary["h"] = field;
  out.summary["fisher_information"] = fisher;
  out.summary["n_sets"] = config.n_sets;
  out.summary["seed"] = config.seed;
  out.summary["prior"] = {{"min", spec.j_min}, {"max", spec.j_max}};
  out.summary["grid_points"] = spec.points;
  nlohmann::json row_list = nlohmann::json::array();
  for (const Row &row : rows) {
    nlohmann::json r;
    r["M"] = row.measurements;
    if (row.error.empty()) {
      r["mean_bayes_variance"] = row.mean_variance;
      r["asymptotic_variance"] = row.asymptotic_variance;
      r["cr_bound"] = row.cr_bound;
    } else {
      r["error"] = row.error;
    }
    row_list.push_back(std::move(r));
  }
  out.summary["rows"] = std::move(row_list);
  return out;
}

// ---------------------------------------------------------------------------
// scaling: finite-size scan of G with the fitted exponent.
// ---------------------------------------------------------------------------
struct ScalingRun {
  ResultTable table;
  nlohmann::json summary;
  ScalingFit fit;
};

inline ScalingRun run_scaling(const SweepConfig &config) {
  const double coupling = config.couplings.front();
  const double field = config.fields.front();
  const double beta = config.betas.front();
  ScalingRun out;
  out.fit = scaling_study(config.sizes_list, coupling, field, beta);

  out.table.metadata = standard_metadata(config, "scaling");
  out.table.columns = {"L", "J", "h", "beta", "G", "G_over_L"};
  for (std::size_t i = 0; i < out.fit.sizes.size(); ++i) {
    out.table.rows.push_back({std::to_string(out.fit.sizes[i]), format_double(coupling),
                              format_double(field), format_extended(beta),
                              format_double(out.fit.qfi_values[i]),
                              format_double(out.fit.qfi_values[i] / out.fit.sizes[i])});
  }
  out.summary["task"] = "scaling";
  out.summary["J"] = coupling;
  out.summary["h"] = field;
  out.summary["beta"] = std::isinf(beta) ? nlohmann::json("inf") : nlohmann::json(beta);
  out.summary["alpha"] = out.fit.exponent;
  out.summary["log_coefficient"] = out.fit.log_coefficient;
  out.summary["residual"] = out.fit.residual;
  return out;
}

}  // namespace qfisher
