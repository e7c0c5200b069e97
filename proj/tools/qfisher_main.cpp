// qfisher command-line front end.
//
// Subcommands: qfi-scan, optimal-field, sld-dump, fisher-mag, bayes-sim,
// scaling.  Parameters come from a JSON config (--config) with per-field
// flag overrides; results go to CSV/JSON files that are byte-identical for
// a fixed (config, seed) regardless of --threads.
//
// Exit codes: 0 success, 2 config error, 3 numeric/accuracy error,
// 4 capacity error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qfisher/common.hpp"
#include "qfisher/csv.hpp"
#include "qfisher/sweep.hpp"

namespace {

using qfisher::ConfigError;

// "2,3,inf" or "0.5:2.5:0.5" or "1.5" -> axis values
std::vector<double> parse_axis_flag(const std::string &text, const std::string &name) {
  std::vector<double> values;
  auto parse_one = [&](const std::string &token) {
    if (token == "inf") return qfisher::infinite;
    try {
      std::size_t used = 0;
      const double v = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      return v;
    } catch (const std::exception &) {
      throw ConfigError("flag --" + name + ": cannot parse '" + token + "'");
    }
  };
  if (text.find(':') != std::string::npos) {
    std::istringstream in(text);
    std::string lo, hi, step;
    std::getline(in, lo, ':');
    std::getline(in, hi, ':');
    std::getline(in, step);
    if (step.empty()) throw ConfigError("flag --" + name + ": range needs min:max:step");
    const double a = parse_one(lo), b = parse_one(hi), d = parse_one(step);
    if (!(d > 0) || !std::isfinite(d))
      throw ConfigError("flag --" + name + ": step must be positive and finite");
    if (b < a || !std::isfinite(a) || !std::isfinite(b))
      throw ConfigError("flag --" + name + ": need finite min <= max");
    for (double x = a; x <= b + 0.5 * d; x += d) values.push_back(x);
    return values;
  }
  std::istringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) values.push_back(parse_one(token));
  if (values.empty()) throw ConfigError("flag --" + name + ": empty list");
  return values;
}

struct FlagSet {
  std::string config_path, out_path, summary_path;
  std::string sites, couplings, fields, betas;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<double> true_coupling, bayes_field;
  std::optional<int> n_sets, grid_points;
  std::string m_schedule, sizes;
  std::optional<double> prior_min, prior_max;
};

void add_common_flags(CLI::App *cmd, FlagSet &flags) {
  cmd->set_help_flag("--help", "print this help");  // frees -h for the field flag
  cmd->add_option("--config", flags.config_path, "JSON config file");
  cmd->add_option("--out", flags.out_path, "output CSV/JSON path (default: stdout)");
  cmd->add_option("--seed", flags.seed, "master seed (64-bit)");
  cmd->add_option("--threads", flags.threads, "parallel workers over grid points");
  cmd->add_option("--L", flags.sites, "chain sizes, e.g. 2,3,4 or inf");
  cmd->add_option("--J", flags.couplings, "couplings, list or min:max:step");
  cmd->add_option("--h", flags.fields, "fields, list or min:max:step");
  cmd->add_option("--beta", flags.betas, "inverse temperatures, inf allowed");
}

qfisher::SweepConfig build_config(const FlagSet &flags) {
  nlohmann::json doc = nlohmann::json::object();
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) throw ConfigError("cannot open config file '" + flags.config_path + "'");
    try {
      in >> doc;
    } catch (const nlohmann::json::exception &err) {
      throw ConfigError("config parse error in '" + flags.config_path + "': " + err.what());
    }
  }
  try {
    auto config = qfisher::parse_config(doc);
    if (!flags.sites.empty()) config.sites = parse_axis_flag(flags.sites, "L");
    if (!flags.couplings.empty()) config.couplings = parse_axis_flag(flags.couplings, "J");
    if (!flags.fields.empty()) config.fields = parse_axis_flag(flags.fields, "h");
    if (!flags.betas.empty()) config.betas = parse_axis_flag(flags.betas, "beta");
    if (flags.seed) config.seed = *flags.seed;
    if (flags.threads) config.threads = *flags.threads;
    if (!flags.out_path.empty()) config.out_path = flags.out_path;
    if (!flags.summary_path.empty()) config.summary_path = flags.summary_path;
    if (flags.true_coupling) config.true_coupling = *flags.true_coupling;
    if (flags.bayes_field) config.bayes_field = *flags.bayes_field;
    if (flags.n_sets) config.n_sets = *flags.n_sets;
    if (flags.grid_points) config.grid_points = *flags.grid_points;
    if (!flags.m_schedule.empty()) {
      config.m_schedule.clear();
      for (const double m : parse_axis_flag(flags.m_schedule, "M")) {
        if (!(m >= 1) || !std::isfinite(m) || m > 1e18)
          throw ConfigError("flag --M: measurement counts must be integers >= 1");
        config.m_schedule.push_back(static_cast<std::uint64_t>(m));
      }
    }
    if (!flags.sizes.empty()) {
      config.sizes_list.clear();
      for (const double s : parse_axis_flag(flags.sizes, "sizes")) {
        if (!(s >= 2) || !std::isfinite(s) || s > 1e9)
          throw ConfigError("flag --sizes: chain sizes must be integers >= 2");
        config.sizes_list.push_back(static_cast<int>(s));
      }
    }
    if (flags.prior_min && flags.prior_max)
      config.prior = std::make_pair(*flags.prior_min, *flags.prior_max);
    qfisher::validate_config(config);  // re-check after flag overrides
    return config;
  } catch (const nlohmann::json::exception &err) {
    throw ConfigError(std::string("config error: ") + err.what());
  }
}

void emit_table(const qfisher::ResultTable &table, const std::string &path) {
  if (path.empty()) {
    qfisher::write_csv(std::cout, table);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file '" + path + "'");
  qfisher::write_csv(out, table);
}

void emit_json(const nlohmann::json &doc, const std::string &path) {
  if (path.empty()) {
    std::cout << doc.dump(2) << "\n";
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file '" + path + "'");
  out << doc.dump(2) << "\n";
}

int exit_code_for(const qfisher::Error &err) {
  if (dynamic_cast<const qfisher::CapacityError *>(&err)) return 4;
  if (dynamic_cast<const qfisher::ConfigError *>(&err) ||
      dynamic_cast<const qfisher::DomainError *>(&err))
    return 2;
  return 3;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"quantum Fisher information toolkit for the transverse-field Ising chain"};
  app.set_help_flag("--help", "print this help");
  app.set_version_flag("--version", std::string("qfisher ") + qfisher::version_string);
  app.require_subcommand(1);

  FlagSet flags;
  std::string task;

  auto *scan = app.add_subcommand("qfi-scan", "QFI over an (L, J, h, beta) grid");
  add_common_flags(scan, flags);
  scan->callback([&] { task = "qfi-scan"; });

  auto *optimal = app.add_subcommand("optimal-field", "field maximizing the QFI");
  add_common_flags(optimal, flags);
  optimal->callback([&] { task = "optimal-field"; });

  auto *sld = app.add_subcommand("sld-dump", "SLD matrix with diagnostics as JSON");
  add_common_flags(sld, flags);
  sld->callback([&] { task = "sld-dump"; });

  auto *fisher = app.add_subcommand("fisher-mag",
                                    "magnetization Fisher information efficiency table");
  add_common_flags(fisher, flags);
  fisher->callback([&] { task = "fisher-mag"; });

  auto *bayes = app.add_subcommand("bayes-sim", "Monte-Carlo Bayesian estimation campaign");
  add_common_flags(bayes, flags);
  bayes->add_option("--true-J", flags.true_coupling, "true coupling J*");
  bayes->add_option("--bayes-h", flags.bayes_field,
                    "measurement field (default: argmax of the Fisher information)");
  bayes->add_option("--M", flags.m_schedule, "measurement schedule, e.g. 100,200,500");
  bayes->add_option("--n-sets", flags.n_sets, "experiments per schedule entry");
  bayes->add_option("--grid-points", flags.grid_points, "posterior grid resolution");
  bayes->add_option("--prior-min", flags.prior_min, "flat prior lower edge");
  bayes->add_option("--prior-max", flags.prior_max, "flat prior upper edge");
  bayes->add_option("--summary", flags.summary_path, "JSON summary path");
  bayes->callback([&] { task = "bayes-sim"; });

  auto *scaling = app.add_subcommand("scaling", "finite-size scaling fit of the QFI");
  add_common_flags(scaling, flags);
  scaling->add_option("--sizes", flags.sizes, "chain sizes for the fit, e.g. 64,128,256");
  scaling->add_option("--summary", flags.summary_path, "JSON summary path");
  scaling->callback([&] { task = "scaling"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &err) {
    if (err.get_exit_code() == 0) return app.exit(err);  // --help / --version
    app.exit(err);
    return 2;
  }

  try {
    const qfisher::SweepConfig config = build_config(flags);
    if (task == "qfi-scan") {
      emit_table(qfisher::run_qfi_scan(config), config.out_path);
    } else if (task == "optimal-field") {
      emit_table(qfisher::run_optimal_field(config), config.out_path);
    } else if (task == "sld-dump") {
      if (std::isinf(config.sites.front()))
        throw ConfigError("flag --L: sld-dump needs a finite chain size");
      qfisher::SpinChainParams params;
      params.sites = static_cast<int>(config.sites.front());
      params.coupling = config.couplings.front();
      params.field = config.fields.front();
      params.beta = config.betas.front();
      emit_json(qfisher::run_sld_dump(params, config.site_cap), config.out_path);
    } else if (task == "fisher-mag") {
      emit_table(qfisher::run_fisher_mag(config), config.out_path);
    } else if (task == "bayes-sim") {
      const qfisher::BayesCampaign campaign = qfisher::run_bayes_sim(config);
      emit_table(campaign.table, config.out_path);
      if (!config.summary_path.empty()) emit_json(campaign.summary, config.summary_path);
    } else if (task == "scaling") {
      const qfisher::ScalingRun run = qfisher::run_scaling(config);
      emit_table(run.table, config.out_path);
      if (!config.summary_path.empty()) emit_json(run.summary, config.summary_path);
      std::cerr << "alpha = " << qfisher::format_double(run.fit.exponent) << "\n";
    }
  } catch (const qfisher::Error &err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code_for(err);
  } catch (const std::exception &err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }
  return 0;
}
