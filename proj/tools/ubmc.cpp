// ubmc <experiment> --config <file.json> [--seed S] [--replicates L] [--out dir]
//      [--parallel P] [--wall-clock]
// Exit codes: 0 success, 2 validation error, 3 runtime error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ubmc/errors.hpp"
#include "ubmc/harness/config.hpp"
#include "ubmc/harness/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Unbiased Monte Carlo experiment runner"};
  std::string experiment;
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replicates;
  std::optional<std::string> out;
  std::optional<unsigned> parallel;
  bool wall_clock = false;
  app.add_option("experiment", experiment, "experiment tag")->required();
  app.add_option("--config", config_file, "JSON experiment config")->required();
  app.add_option("--seed", seed, "override config seed");
  app.add_option("--replicates", replicates, "override config replicate count");
  app.add_option("--out", out, "output directory");
  app.add_option("--parallel", parallel, "worker threads");
  app.add_flag("--wall-clock", wall_clock, "record wall-clock nanoseconds in the summary");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto config = ubmc::harness::ExperimentConfig::load(config_file);
    ubmc::require(config.experiment == experiment,
                  "experiment \"" + experiment + "\" does not match config experiment \"" + config.experiment + "\"");
    if (seed) config.seed = *seed;
    if (replicates) {
      ubmc::require(*replicates >= 1, "--replicates must be ≥ 1");
      config.replicates = *replicates;
    }
    if (out) config.output = *out;
    if (parallel) {
      ubmc::require(*parallel >= 1 && *parallel <= 1024, "--parallel must lie in [1, 1024]");
      config.parallel = *parallel;
    }
    config.wall_clock = config.wall_clock || wall_clock;
    const auto result = ubmc::harness::run_experiment(config);
    ubmc::harness::write_outputs(result, config.output);
    std::cout << result.summary.dump(2) << "\n";
    return 0;
  } catch (const ubmc::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
}
