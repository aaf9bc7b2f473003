#include "pipeline.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

#include "io.hpp"
#include "nlfb/asymptotics.hpp"
#include "nlfb/errors.hpp"
#include "nlfb/fbsolver.hpp"
#include "nlfb/semiwave.hpp"

namespace nlfb::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Prefixes "module.op: " to any failure while keeping the exit-code class.
template <class F>
auto stage(const std::string& op, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(op + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(op + ": " + e.what());
  } catch (const std::exception& e) {
    throw NumericalError(op + ": " + e.what());
  }
}

fs::path prepare(const RunOptions& opt) {
  fs::create_directories(opt.out_dir);
  return opt.out_dir;
}

std::string species_column(const std::string& stem, int i) { return stem + std::to_string(i + 1); }

std::vector<Kernel> diffusing_kernels(const ScenarioConfig& cfg, const ReactionSystem& sys) {
  if (cfg.kernels.size() == 1) return std::vector<Kernel>(sys.m0, cfg.kernels.front());
  return cfg.kernels;
}

bool all_J1(const ScenarioConfig& cfg, const ReactionSystem& sys) {
  const auto ks = diffusing_kernels(cfg, sys);
  for (int i = 0; i < sys.m0; ++i)
    if (sys.mu[i] > 0.0 && !classify(ks[i]).satisfies_J1) return false;
  return true;
}

json window_json(const FitWindow& w) { return {{"lo", w.lo}, {"hi", w.hi}}; }

json kernel_json(const Kernel& k) {
  const KernelConditionReport c = classify(k);
  json j;
  j["family"] = std::string(to_string(k.family()));
  j["param"] = k.param();
  j["J"] = c.satisfies_J;
  j["J1"] = c.satisfies_J1;
  j["J2"] = c.satisfies_J2;
  j["j2_witness"] = c.j2_witness ? json(*c.j2_witness) : json(nullptr);
  j["alpha_star"] = to_json(c.alpha_star);
  j["gamma"] = c.gamma_tag ? json(*c.gamma_tag) : json(nullptr);
  j["moments"] = {{"0", to_json(moment(k, 0.0))},
                  {"1", to_json(moment(k, 1.0))},
                  {"2", to_json(moment(k, 2.0))}};
  j["tail_mass"] = {{"1", tail_mass(k, 1.0)}, {"10", tail_mass(k, 10.0)}, {"100", tail_mass(k, 100.0)}};
  j["tail_integral_0"] = to_json(tail_integral(k, 0.0));
  return j;
}

json check_json(const AssumptionCheck& c) {
  json j = {{"passed", c.passed}, {"detail", c.detail}};
  j["counterexample"] = c.counterexample ? to_json(*c.counterexample) : json(nullptr);
  return j;
}

json evaluation_json(const SpeedEvaluation& e) {
  return {{"c", e.c},
          {"flux", e.flux},
          {"regime", std::string(to_string(e.regime))},
          {"local_max", e.local_max},
          {"ambiguous", e.ambiguous}};
}

json tail_json(const TailReport& t) {
  return {{"kind", std::string(to_string(t.kind))},
          {"rate", t.rate},
          {"r2_exponential", t.r2_exponential},
          {"r2_algebraic", t.r2_algebraic},
          {"window", {{"lo", t.window_lo}, {"hi", t.window_hi}}},
          {"points", t.points}};
}

void write_profile(const SemiWaveProfile& p, const fs::path& path) {
  std::vector<std::string> header{"x"};
  for (Eigen::Index i = 0; i < p.values.rows(); ++i) header.push_back(species_column("phi", int(i)));
  CsvWriter csv(header);
  std::vector<double> row(header.size());
  for (Eigen::Index j = 0; j < p.nodes(); ++j) {
    row[0] = p.x(j);
    for (Eigen::Index i = 0; i < p.values.rows(); ++i) row[i + 1] = p.values(i, j);
    csv.row(row);
  }
  csv.close(path);
}

json profile_json(const SemiWaveProblem& prob, const SemiWaveResult& r, const fs::path& dir,
                  const std::string& csv_name) {
  json j;
  j["regime"] = std::string(to_string(r.regime));
  j["L_used"] = r.L_used;
  j["shift_history"] = r.shift_history;
  if (!r.profile) return j;
  const SemiWaveProfile& p = *r.profile;
  j["c"] = p.c;
  j["dx"] = p.dx;
  j["iterations"] = p.iterations;
  j["residual"] = p.residual;
  j["converged_left"] = p.converged_left;
  j["flux"] = to_json(flux_functional(prob, p));
  const auto half = half_level_shift(p, prob.u_star[0]);
  j["half_level_x"] = half ? json(*half) : json(nullptr);
  j["tail"] = tail_json(tail_report(p, prob.u_star[0]));
  write_profile(p, dir / csv_name);
  j["profile_csv"] = csv_name;
  return j;
}

SemiWaveProblem semiwave_problem(const ScenarioConfig& cfg) {
  const ReactionSystem sys = build_system(cfg);
  return stage("semiwave.make_problem", [&] { return make_semiwave_problem(sys, cfg.kernels); });
}

C0Result compute_c0(const SemiWaveProblem& prob, const ScenarioConfig& cfg) {
  return stage("semiwave.find_c0", [&] { return find_c0(prob, cfg.tol_c, cfg.semiwave); });
}

json c0_json(const SemiWaveProblem& prob, const C0Result& r, const fs::path& dir) {
  json j;
  j["c0"] = r.c0;
  j["flux_at_c0"] = r.flux_at_c0;
  j["residual_c0_minus_flux"] = std::abs(r.c0 - r.flux_at_c0);
  j["bracket"] = {r.c_lo, r.c_hi};
  j["evaluations"] = json::array();
  for (const auto& e : r.evaluations) j["evaluations"].push_back(evaluation_json(e));
  j["profile"] = profile_json(prob, r.at_c0, dir, "semiwave_profile.csv");
  return j;
}

struct SimOutput {
  Trajectory traj;
  json report;
};

SimOutput run_simulation(const ScenarioConfig& cfg, const fs::path& dir) {
  const ReactionSystem sys = build_system(cfg);
  const FbModel model = stage("fbsolver.model", [&] {
    return FbModel(sys, cfg.kernels, cfg.sim.dx, cfg.sim.fft_threshold);
  });
  SimOutput out;
  out.traj = stage("fbsolver.run", [&] { return run(model, cfg.sim); });
  const Trajectory& tr = out.traj;
  const int m = sys.m;

  std::vector<std::string> header{"t", "g", "h", "g_dot", "h_dot"};
  for (int i = 0; i < m; ++i) header.push_back(species_column("center_u", i));
  CsvWriter csv(header);
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    std::vector<double> row{tr.t[k], tr.g[k], tr.h[k], tr.g_dot[k], tr.h_dot[k]};
    for (int i = 0; i < m; ++i) row.push_back(tr.center[k][i]);
    csv.row(row);
  }
  csv.close(dir / "trajectory.csv");

  json snaps = json::array();
  for (std::size_t s = 0; s < tr.snapshots.size(); ++s) {
    const Snapshot& sn = tr.snapshots[s];
    std::vector<std::string> sh{"x"};
    for (int i = 0; i < m; ++i) sh.push_back(species_column("u", i));
    CsvWriter sc(sh);
    for (Eigen::Index j = 0; j < sn.x.size(); ++j) {
      std::vector<double> row{sn.x[j]};
      for (int i = 0; i < m; ++i) row.push_back(sn.values(i, j));
      sc.row(row);
    }
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%03zu.csv", s);
    sc.close(dir / name);
    snaps.push_back({{"t", sn.t}, {"file", name}});
  }

  double sandwich = 0.0;
  for (double e : tr.sandwich_excess) sandwich = std::max(sandwich, e);
  double sym = 0.0;
  for (std::size_t k = 0; k < tr.t.size(); ++k) sym = std::max(sym, std::abs(tr.g[k] + tr.h[k]));

  json& r = out.report;
  r["scenario"] = cfg.name;
  r["dx"] = tr.dx;
  r["dt"] = tr.dt;
  r["T_final"] = cfg.sim.T_final;
  r["samples"] = tr.t.size();
  r["u_star"] = to_json(model.u_star());
  r["final"] = {{"g", tr.final_state.g()},
                {"h", tr.final_state.h()},
                {"active_nodes", tr.final_state.active()}};
  r["outcome"] = std::string(to_string(classify_outcome(tr, model.u_star())));
  r["max_sandwich_excess"] = sandwich;
  r["min_before_clamp"] = tr.min_before_clamp;
  r["max_abs_g_plus_h"] = sym;
  r["trajectory_csv"] = "trajectory.csv";
  r["snapshots"] = snaps;
  write_json(dir / "run_report.json", r);
  return out;
}

json asymptotics_json(const AsymptoticsReport& a, std::optional<double> c0) {
  json j;
  j["window"] = window_json(a.window);
  auto lin = [](const LinearSpeed& s) {
    return json{{"slope", s.slope}, {"stderr", s.slope_stderr}, {"r2", s.r2}, {"samples", s.samples}};
  };
  j["h_speed"] = a.linear_speed ? lin(*a.linear_speed) : json(nullptr);
  j["g_speed"] = a.g_speed ? lin(*a.g_speed) : json(nullptr);
  j["growth_order"] = a.growth ? json{{"p", a.growth->p}, {"r2", a.growth->r2}} : json(nullptr);
  j["tlnt_ratio"] = a.tlnt ? json{{"min", a.tlnt->min}, {"max", a.tlnt->max}} : json(nullptr);
  j["c0"] = c0 ? json(*c0) : json(nullptr);
  if (a.lag) {
    const LagFit& l = *a.lag;
    j["lag"] = {{"model", std::string(to_string(l.model))},
                {"log", {{"a", l.log_a}, {"b", l.log_b}, {"r2", l.r2_log}}},
                {"power", {{"a", l.power_a}, {"q", l.power_q}, {"q_stderr", l.power_q_stderr},
                           {"r2", l.r2_power}}},
                {"within_margin", l.within_margin},
                {"measured_from", "h(t) - h(0)"}};
  } else {
    j["lag"] = nullptr;
  }
  if (c0 && a.linear_speed) j["relative_gap"] = std::abs(a.linear_speed->slope - *c0) / *c0;
  j["notes"] = a.notes;
  return j;
}

json analyze_series(const VectorXd& t, const VectorXd& g, const VectorXd& h, std::optional<double> c0,
                    double fraction, double exclude_end, const fs::path& dir) {
  const FitWindow w = stage("asymptotics.window", [&] { return trailing_window(t, fraction, exclude_end); });
  const AsymptoticsReport a = stage("asymptotics.analyze", [&] { return nlfb::analyze(t, g, h, c0, w); });
  json j = asymptotics_json(a, c0);
  write_json(dir / "asymptotics.json", j);
  return j;
}

VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

json check_kernel(const ScenarioConfig& cfg, const RunOptions& opt) {
  const fs::path dir = prepare(opt);
  json j;
  j["scenario"] = cfg.name;
  j["kernels"] = json::array();
  for (const Kernel& k : cfg.kernels) j["kernels"].push_back(kernel_json(k));
  write_json(dir / "kernel_report.json", j);
  return j;
}

json check_reaction(const ScenarioConfig& cfg, const RunOptions& opt) {
  const fs::path dir = prepare(opt);
  const ReactionSystem sys = build_system(cfg);
  const std::uint64_t seed = opt.seed.value_or(cfg.seed);
  const AssumptionReport r = stage("reaction.verify_assumptions",
                                   [&] { return verify_assumptions(sys, cfg.check_samples, seed); });
  json j;
  j["scenario"] = cfg.name;
  j["system"] = sys.name;
  j["seed"] = seed;
  j["samples"] = cfg.check_samples;
  j["f1_roots"] = check_json(r.f1_roots);
  j["f1_cooperative"] = check_json(r.f1_cooperative);
  j["f1_irreducible"] = check_json(r.f1_irreducible);
  j["f1_coupling"] = check_json(r.f1_coupling);
  j["f2_subhomogeneous"] = check_json(r.f2_subhomogeneous);
  j["f3_stability"] = check_json(r.f3_stability);
  j["strengthened_f2"] = check_json(r.strengthened_f2);
  j["f4_empirical"] = r.f4_empirical;
  j["f1_to_f3_passed"] = r.f1_to_f3_passed();
  j["equilibrium"] = r.equilibrium ? to_json(*r.equilibrium) : json(nullptr);
  j["lambda1"] = r.lambda1 ? json(*r.lambda1) : json(nullptr);
  j["lipschitz"] = r.lipschitz ? json(*r.lipschitz) : json(nullptr);
  j["f3_reading"] = r.f3_reading;
  j["notes"] = r.notes;
  write_json(dir / "assumption_report.json", j);
  return j;
}

json semiwave(const ScenarioConfig& cfg, const RunOptions& opt) {
  const fs::path dir = prepare(opt);
  const SemiWaveProblem prob = semiwave_problem(cfg);
  json j;
  j["scenario"] = cfg.name;
  j["u_star"] = to_json(prob.u_star);
  j["theta"] = to_json(prob.theta);
  if (cfg.c) {
    const SemiWaveResult r =
        stage("semiwave.solve", [&] { return solve_semiwave(prob, *cfg.c, cfg.semiwave); });
    j["c"] = *cfg.c;
    j["profile"] = profile_json(prob, r, dir, "semiwave_profile.csv");
  } else {
    j["speed"] = c0_json(prob, compute_c0(prob, cfg), dir);
  }
  if (!cfg.c_grid.empty()) {
    const CstarBracket b = stage("semiwave.bracket_Cstar", [&] {
      return bracket_Cstar(prob, cfg.c_grid, cfg.semiwave, cfg.refine_steps);
    });
    json bj = {{"unbounded", b.unbounded}, {"lo", b.lo}, {"hi", b.hi}, {"scan", json::array()}};
    for (const auto& e : b.scan) bj["scan"].push_back(evaluation_json(e));
    j["cstar"] = bj;
  }
  write_json(dir / "semiwave.json", j);
  return j;
}

json compare_speed(const ScenarioConfig& cfg, const RunOptions& opt) {
  const fs::path dir = prepare(opt);
  const SemiWaveProblem prob = semiwave_problem(cfg);
  const C0Result c0 = compute_c0(prob, cfg);
  SimOutput sim = run_simulation(cfg, dir);
  const VectorXd t = to_vector(sim.traj.t), g = to_vector(sim.traj.g), h = to_vector(sim.traj.h);
  const FitWindow w = stage("asymptotics.window",
                            [&] { return trailing_window(t, cfg.window_fraction, cfg.exclude_end); });
  const LinearSpeed hs = stage("asymptotics.fit_linear_speed", [&] { return fit_linear_speed(t, h, w); });
  const LinearSpeed gs =
      stage("asymptotics.fit_linear_speed", [&] { return fit_linear_speed(t, VectorXd(-g), w); });
  json j;
  j["scenario"] = cfg.name;
  j["c0"] = c0.c0;
  j["flux_at_c0"] = c0.flux_at_c0;
  j["fitted_speed"] = hs.slope;
  j["fitted_speed_stderr"] = hs.slope_stderr;
  j["relative_gap"] = std::abs(hs.slope - c0.c0) / c0.c0;
  j["g_fitted_speed"] = gs.slope;
  j["g_relative_gap"] = std::abs(gs.slope - c0.c0) / c0.c0;
  j["window"] = window_json(w);
  j["dx"] = sim.traj.dx;
  j["dt"] = sim.traj.dt;
  write_json(dir / "speed_report.json", j);
  return j;
}

json simulate(const ScenarioConfig& cfg, const RunOptions& opt) {
  const fs::path dir = prepare(opt);
  return run_simulation(cfg, dir).report;
}

json analyze(const fs::path& trajectory_csv, std::optional<double> c0, const ScenarioConfig* cfg,
             const RunOptions& opt) {
  const fs::path dir = prepare(opt);
  const TrajectorySeries s = stage("io.read_trajectory", [&] { return read_trajectory_csv(trajectory_csv); });
  if (!c0 && cfg) c0 = cfg->c0;
  const double fraction = cfg ? cfg->window_fraction : 0.5;
  const double exclude = cfg ? cfg->exclude_end : 0.02;
  return analyze_series(s.t, s.g, s.h, c0, fraction, exclude, dir);
}

json run_scenario(const ScenarioConfig& cfg, const RunOptions& opt) {
  const fs::path dir = prepare(opt);
  json summary;
  summary["scenario"] = cfg.name;
  summary["mode"] = cfg.mode == Mode::Standard ? "standard" : "accelerated";
  json artifacts = json::array();

  const json kr = check_kernel(cfg, opt);
  artifacts.push_back("kernel_report.json");
  const json ar = check_reaction(cfg, opt);
  artifacts.push_back("assumption_report.json");
  summary["assumptions_passed"] = ar["f1_to_f3_passed"];

  const ReactionSystem sys = build_system(cfg);
  std::optional<double> c0 = cfg.c0;
  if (cfg.mode == Mode::Standard && all_J1(cfg, sys)) {
    const SemiWaveProblem prob = semiwave_problem(cfg);
    const C0Result r = compute_c0(prob, cfg);
    json sw;
    sw["scenario"] = cfg.name;
    sw["u_star"] = to_json(prob.u_star);
    sw["speed"] = c0_json(prob, r, dir);
    write_json(dir / "semiwave.json", sw);
    artifacts.push_back("semiwave.json");
    artifacts.push_back("semiwave_profile.csv");
    c0 = r.c0;
  } else {
    summary["semiwave_skipped"] = cfg.mode == Mode::Accelerated
                                      ? "accelerated mode"
                                      : "a kernel with mu > 0 violates (J1); no finite speed";
  }
  summary["c0"] = c0 ? json(*c0) : json(nullptr);

  SimOutput sim = run_simulation(cfg, dir);
  artifacts.push_back("run_report.json");
  artifacts.push_back("trajectory.csv");
  for (const auto& s : sim.report["snapshots"]) artifacts.push_back(s["file"]);
  summary["outcome"] = sim.report["outcome"];
  summary["final"] = sim.report["final"];

  const json as = analyze_series(to_vector(sim.traj.t), to_vector(sim.traj.g), to_vector(sim.traj.h),
                                 c0, cfg.window_fraction, cfg.exclude_end, dir);
  artifacts.push_back("asymptotics.json");
  summary["fitted_speed"] = as["h_speed"].is_null() ? json(nullptr) : as["h_speed"]["slope"];
  if (as.contains("relative_gap")) summary["relative_gap"] = as["relative_gap"];
  summary["growth_order"] = as["growth_order"].is_null() ? json(nullptr) : as["growth_order"]["p"];
  summary["artifacts"] = artifacts;
  write_json(dir / "summary.json", summary);
  return summary;
}

json batch(const fs::path& batch_file, const RunOptions& opt) {
  const json spec = read_json(batch_file);
  if (!spec.is_object() || !spec.contains("scenarios") || !spec["scenarios"].is_array())
    throw ValidationError("batch $.scenarios: missing or not an array");
  std::vector<fs::path> paths;
  for (std::size_t i = 0; i < spec["scenarios"].size(); ++i) {
    const json& p = spec["scenarios"][i];
    if (!p.is_string())
      throw ValidationError("batch $.scenarios[" + std::to_string(i) + "]: must be a path string");
    fs::path path = p.get<std::string>();
    if (path.is_relative()) path = batch_file.parent_path() / path;
    paths.push_back(path);
  }

  std::vector<json> results(paths.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < paths.size(); i = next++) {
      json r = {{"config", paths[i].filename().string()}};
      try {
        const ScenarioConfig cfg = load_scenario(paths[i]);
        RunOptions sub = opt;
        sub.out_dir = opt.out_dir / cfg.name;
        r["scenario"] = cfg.name;
        r["summary"] = run_scenario(cfg, sub);
        r["exit_code"] = 0;
      } catch (const std::exception& e) {
        r["exit_code"] = exit_code_for(e);
        r["error"] = e.what();
      }
      results[i] = std::move(r);
    }
  };
  const int n = std::max(1, std::min<int>(opt.threads, static_cast<int>(paths.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  fs::create_directories(opt.out_dir);
  int worst = 0;
  for (const auto& r : results) worst = std::max(worst, r["exit_code"].get<int>());
  json j = {{"runs", results}, {"exit_code", worst}};
  write_json(opt.out_dir / "batch_report.json", j);
  return j;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const std::invalid_argument*>(&e)) return 2;
  return 3;
}

}  // namespace nlfb::cli
