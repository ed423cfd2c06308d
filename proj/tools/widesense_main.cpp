// widesense <experiment> --config <path.json> [--seed U64] [--trials N] [--out PATH] [--force]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical error.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "widesense/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace widesense;

  CLI::App app{"Blind wideband spectrum sensing experiments"};
  std::string experiment_name;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> out;
  bool force = false;

  app.add_option("experiment", experiment_name,
                 "mp-check | noise-error-equal | noise-error-adaptive | pfa-curve | roc | pd-vs-snr")
      ->required();
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--seed", seed, "master seed (overrides config)");
  app.add_option("--trials", trials, "evaluation trials (overrides config)");
  app.add_option("--out", out, "output CSV path (overrides config)");
  app.add_flag("--force", force, "overwrite an output written with a different config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const auto experiment = harness::experiment_from_string(experiment_name);
    std::ifstream in(config_path);
    if (!in) throw harness::ConfigError("cannot open config " + config_path);
    nlohmann::json config;
    try {
      config = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw harness::ConfigError("malformed config " + config_path + ": " + e.what());
    }
    if (seed) config["master_seed"] = *seed;
    if (trials) config["trials"] = *trials;
    if (out) config["output"] = *out;

    const auto spec = harness::parse_spec(config, experiment);
    const auto table = harness::run_experiment(spec);
    harness::write_table(table, spec.output, force);
    std::cerr << "wrote " << table.rows().size() << " rows to " << spec.output << " (config "
              << table.config_hash << ")\n";
    return 0;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
