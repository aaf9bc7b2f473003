#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlfb/fbsolver.hpp"
#include "nlfb/kernels.hpp"
#include "nlfb/reaction.hpp"
#include "nlfb/semiwave.hpp"

namespace nlfb::cli {

enum class Mode { Standard, Accelerated };

struct ScenarioConfig {
  std::string name;
  std::string preset;
  std::map<std::string, double> params;
  std::vector<Kernel> kernels;
  std::optional<VectorXd> d, mu;
  Mode mode = Mode::Standard;

  SimulationConfig sim;

  SemiWaveOptions semiwave;
  double tol_c = 1e-4;
  std::optional<double> c;
  std::vector<double> c_grid;
  int refine_steps = 0;

  double window_fraction = 0.5;
  double exclude_end = 0.02;
  std::optional<double> c0;

  int check_samples = 2000;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";
};

/// Parses and validates a scenario; errors carry the JSON path of the
/// offending field, e.g. "$.kernels[0].family".
ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

/// Reaction system with the optional d / mu overrides applied.
ReactionSystem build_system(const ScenarioConfig& cfg);

}  // namespace nlfb::cli
