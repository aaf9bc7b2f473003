#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nlfb/errors.hpp"
#include "pipeline.hpp"
#include "scenario.hpp"

using namespace nlfb::cli;

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal free-boundary spreading: speeds, semi-waves and simulations"};
  app.require_subcommand(1);

  std::string config_path, out_dir, trajectory;
  int threads = 1;
  std::optional<std::uint64_t> seed;
  std::optional<double> c0;

  app.add_option("--config", config_path, "scenario JSON (batch: list of scenarios)");
  app.add_option("--out-dir", out_dir, "output directory (default: the config's, else ./out)");
  app.add_option("--threads", threads, "parallel scenarios in batch")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for the randomized assumption checks");

  auto* check_kernel_cmd = app.add_subcommand("check-kernel", "kernel conditions and moments");
  auto* check_reaction_cmd = app.add_subcommand("check-reaction", "sampled checks of the reaction assumptions");
  auto* semiwave_cmd = app.add_subcommand("semiwave", "semi-wave profile at c, or the speed c0 and the profile there");
  auto* speed_cmd = app.add_subcommand("speed", "c0 against the fitted front speed of a simulation");
  auto* simulate_cmd = app.add_subcommand("simulate", "evolve the free-boundary problem");
  auto* analyze_cmd = app.add_subcommand("analyze", "fits on a trajectory CSV");
  auto* batch_cmd = app.add_subcommand("batch", "run_scenario on every config in a batch file");
  auto* run_cmd = app.add_subcommand("run", "the full pipeline for one scenario");
  analyze_cmd->add_option("--trajectory", trajectory, "trajectory CSV")->required();
  analyze_cmd->add_option("--c0", c0, "speed for the lag fit");

  for (auto* sub : app.get_subcommands({}))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunOptions opt;
    opt.seed = seed;
    opt.threads = threads;
    if (batch_cmd->parsed()) {
      if (config_path.empty()) throw nlfb::ValidationError("batch: --config is required");
      opt.out_dir = out_dir.empty() ? "out" : out_dir;
      const auto j = batch(config_path, opt);
      std::cout << j.dump(2) << '\n';
      return j["exit_code"].get<int>();
    }

    std::optional<ScenarioConfig> cfg;
    if (!config_path.empty()) cfg = load_scenario(config_path);
    if (!cfg && !analyze_cmd->parsed()) throw nlfb::ValidationError("--config is required");
    opt.out_dir = !out_dir.empty() ? std::filesystem::path(out_dir)
                  : cfg                ? cfg->out_dir
                                       : std::filesystem::path("out");

    nlohmann::json report;
    if (check_kernel_cmd->parsed()) report = check_kernel(*cfg, opt);
    else if (check_reaction_cmd->parsed()) report = check_reaction(*cfg, opt);
    else if (semiwave_cmd->parsed()) report = semiwave(*cfg, opt);
    else if (speed_cmd->parsed()) report = compare_speed(*cfg, opt);
    else if (simulate_cmd->parsed()) report = simulate(*cfg, opt);
    else if (analyze_cmd->parsed()) report = analyze(trajectory, c0, cfg ? &*cfg : nullptr, opt);
    else if (run_cmd->parsed()) report = run_scenario(*cfg, opt);
    std::cout << report.dump(2) << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}
