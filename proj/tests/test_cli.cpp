// End-to-end checks of the installed binary: flag parsing, config files,
// exit codes and file outputs.
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

const std::string cli = QFISHER_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string &args) {
  const std::string out_file = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
                               "/qfisher_cli_stdout.txt";
  const std::string command = cli + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WEXITSTATUS(status);
  std::ifstream in(out_file);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.output = buffer.str();
  return result;
}

std::string temp_path(const std::string &name) {
  return std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") + "/" + name;
}

std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("version and help", "[cli]") {
  CHECK(run("--version").output.find("qfisher 0.1.0") != std::string::npos);
  const auto help = run("--help");
  CHECK(help.exit_code == 0);
  for (const char *sub :
       {"qfi-scan", "optimal-field", "sld-dump", "fisher-mag", "bayes-sim", "scaling"})
    CHECK(help.output.find(sub) != std::string::npos);
}

TEST_CASE("qfi-scan writes a deterministic csv", "[cli]") {
  const std::string out1 = temp_path("scan1.csv");
  const std::string out2 = temp_path("scan2.csv");
  const std::string flags = "qfi-scan --L 2 --J 0.5 --h 0.2:1.0:0.2 --beta 1,inf --seed 9";
  CHECK(run(flags + " --threads 1 --out " + out1).exit_code == 0);
  CHECK(run(flags + " --threads 3 --out " + out2).exit_code == 0);
  const std::string a = slurp(out1), b = slurp(out2);
  CHECK(a == b);
  CHECK(a.find("L,J,h,beta,G,G1,G2,gamma,backend,error") != std::string::npos);
  CHECK(a.find("# seed: 9") != std::string::npos);
}

TEST_CASE("config file with flag overrides", "[cli]") {
  const std::string config_path = temp_path("scan_config.json");
  {
    std::ofstream out(config_path);
    out << R"({"L": [2], "J": [1.0], "h": {"min": 0.5, "max": 1.5, "step": 0.5},
               "beta": [2.0], "seed": 4})";
  }
  const std::string out_path = temp_path("scan_config_out.csv");
  const auto result =
      run("qfi-scan --config " + config_path + " --seed 5 --out " + out_path);
  CHECK(result.exit_code == 0);
  const std::string text = slurp(out_path);
  CHECK(text.find("# seed: 5") != std::string::npos);  // flag wins over config
  CHECK(text.find("\n2,1,0.5,2,") != std::string::npos);
}

TEST_CASE("exit codes: config, capacity, numeric", "[cli]") {
  // empty h range -> config error, no output file
  const std::string missing = temp_path("never_written.csv");
  std::remove(missing.c_str());
  const auto bad_range = run("qfi-scan --L 2 --J 1 --h 2:1:0.5 --out " + missing);
  CHECK(bad_range.exit_code == 2);
  CHECK_FALSE(std::ifstream(missing).good());

  CHECK(run("qfi-scan --L 2 --J 1 --h -1").exit_code == 2);
  CHECK(run("qfi-scan --L 2 --J nonsense --h 1").exit_code == 2);
  CHECK(run("qfi-scan --L 2 --J 0:inf:1 --h 1").exit_code == 2);
  CHECK(run("bayes-sim --L 2 --beta 1 --true-J 3 --M 0").exit_code == 2);
  CHECK(run("sld-dump --L 13 --J 1 --h 1 --beta 1").exit_code == 4);
  CHECK(run("sld-dump --L inf --J 1 --h 1 --beta 1").exit_code == 2);
}

TEST_CASE("sld-dump emits valid json with diagnostics", "[cli]") {
  const std::string out_path = temp_path("sld.json");
  const auto result = run("sld-dump --L 2 --J 1 --h 1 --beta inf --out " + out_path);
  REQUIRE(result.exit_code == 0);
  const auto doc = nlohmann::json::parse(slurp(out_path));
  CHECK(doc.at("beta") == "inf");
  CHECK(doc.at("closed_form_residual").get<double>() <= 1e-8);
  CHECK(doc.at("sld_real").size() == 4);
}

TEST_CASE("bayes-sim produces summary json that round-trips", "[cli]") {
  const std::string out_path = temp_path("bayes.csv");
  const std::string summary_path = temp_path("bayes_summary.json");
  const auto result = run("bayes-sim --L 2 --beta 1 --true-J 3 --M 50,200 --n-sets 5 "
                          "--grid-points 1001 --seed 3 --out " +
                          out_path + " --summary " + summary_path);
  REQUIRE(result.exit_code == 0);
  const auto doc = nlohmann::json::parse(slurp(summary_path));
  CHECK(doc.at("true_J") == 3.0);
  CHECK(doc.at("rows").size() == 2);
  CHECK(nlohmann::json::parse(doc.dump()) == doc);
  const std::string csv = slurp(out_path);
  CHECK(csv.find("M,mean_bayes_variance,asymptotic_variance,cr_bound,n_sets,error") !=
        std::string::npos);
}

TEST_CASE("optimal-field and fisher-mag emit their tables", "[cli]") {
  const std::string hstar_path = temp_path("hstar_cli.csv");
  REQUIRE(run("optimal-field --L 2 --J 1 --beta inf --out " + hstar_path).exit_code == 0);
  const std::string hstar_csv = slurp(hstar_path);
  CHECK(hstar_csv.find("L,J,beta,h_star,G_at_h_star,Q,backend,error") != std::string::npos);
  CHECK(hstar_csv.find("spin-exact") != std::string::npos);

  const std::string ratio_path = temp_path("ratio_cli.csv");
  REQUIRE(run("fisher-mag --L 2 --J 1 --beta 3 --out " + ratio_path).exit_code == 0);
  const std::string ratio_csv = slurp(ratio_path);
  CHECK(ratio_csv.find("h_tilde") != std::string::npos);
  CHECK(ratio_csv.find("delta_max") != std::string::npos);
}

TEST_CASE("scaling subcommand reports the critical exponent", "[cli]") {
  const std::string out_path = temp_path("scaling.csv");
  const std::string summary_path = temp_path("scaling_summary.json");
  const auto result = run("scaling --J 1 --h 1 --beta inf --sizes 64,128,256,512 --out " +
                          out_path + " --summary " + summary_path);
  REQUIRE(result.exit_code == 0);
  const auto doc = nlohmann::json::parse(slurp(summary_path));
  const double alpha = doc.at("alpha").get<double>();
  CHECK(std::abs(alpha - 2.0) <= 0.02);
  CHECK(run("scaling --J 1 --h 1 --beta inf --sizes 64,128").exit_code == 3);
}
