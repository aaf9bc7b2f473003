#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "scenario.hpp"

namespace nlfb::cli {

struct RunOptions {
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;  // overrides the config's check seed
  int threads = 1;
};

/// Each command writes its artifacts into opt.out_dir and returns the JSON
/// report it wrote.
nlohmann::json check_kernel(const ScenarioConfig& cfg, const RunOptions& opt);
nlohmann::json check_reaction(const ScenarioConfig& cfg, const RunOptions& opt);
nlohmann::json semiwave(const ScenarioConfig& cfg, const RunOptions& opt);
nlohmann::json compare_speed(const ScenarioConfig& cfg, const RunOptions& opt);
nlohmann::json simulate(const ScenarioConfig& cfg, const RunOptions& opt);
nlohmann::json analyze(const std::filesystem::path& trajectory_csv, std::optional<double> c0,
                       const ScenarioConfig* cfg, const RunOptions& opt);
/// kernel + assumption reports, semi-wave summary when (J1) holds,
/// trajectory and asymptotics.
nlohmann::json run_scenario(const ScenarioConfig& cfg, const RunOptions& opt);

/// Runs the scenarios listed in a batch file ({"scenarios": [paths]}) with
/// up to opt.threads in parallel; each gets out_dir/<scenario name>.
nlohmann::json batch(const std::filesystem::path& batch_file, const RunOptions& opt);

/// Maps an exception to the CLI exit status: 2 validation, 3 numerical.
int exit_code_for(const std::exception& e);

}  // namespace nlfb::cli
