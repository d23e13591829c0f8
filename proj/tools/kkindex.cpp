#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "kkindex/experiments.hpp"

namespace {

// Exit codes: 0 every check passed, 1 some check failed, 2 usage or input error.
int run(const std::string& target, const std::string& config_path, const std::string& out_flag) {
  using namespace kkindex;
  Config cfg = config_path.empty() ? Config{} : parse_config(config_path);

  std::vector<std::string> names;
  if (target == "all") {
    names = cfg.experiments.empty() ? experiment_registry() : cfg.experiments;
  } else if (is_registered(target)) {
    names = {target};
  } else {
    throw UnknownExperiment("unregistered experiment '" + target + "' (see `kkindex list`)");
  }

  std::filesystem::path dir = cfg.output_dir;
  if (const char* env = std::getenv(output_dir_env); env && *env) dir = env;
  if (!out_flag.empty()) dir = out_flag;

  std::vector<ExperimentReport> reports;
  for (const auto& name : names) {
    reports.push_back(run_experiment(name, cfg));
    const auto& r = reports.back();
    std::cerr << (r.passed() ? "PASS " : "FAIL ") << name << " (" << r.rows.size() << " checks)\n";
  }
  write_reports(reports, cfg, dir);
  std::cout << format_summary(reports, cfg);
  for (const auto& r : reports)
    if (!r.passed()) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks for the KK-index comparison lab"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "List registered experiments");
  auto* run_cmd = app.add_subcommand("run", "Run one experiment or all of them");
  std::string target, config_path, out_dir;
  run_cmd->add_option("experiment", target, "Experiment name or 'all'")->required();
  run_cmd->add_option("--config", config_path, "Config file (key = value lines)")->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "Output directory (overrides KKINDEX_OUT_DIR and output_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (*list) {
    for (const auto& name : kkindex::experiment_registry()) std::cout << name << '\n';
    return 0;
  }
  try {
    return run(target, config_path, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
