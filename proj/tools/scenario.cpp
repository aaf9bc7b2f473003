#include "scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "nlfb/errors.hpp"

namespace nlfb::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError("config " + path + ": " + what);
}

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(path, "must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) fail(path + "." + k, "unknown field");
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "must be a number");
  return j.get<double>();
}

double positive(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0)) fail(path, "must be positive");
  return v;
}

template <class T, class F>
void optional_field(const json& obj, const std::string& path, const char* key, T& out, F conv) {
  if (obj.contains(key)) out = conv(obj.at(key), path + "." + key);
}

VectorXd number_array(const json& j, const std::string& path, bool nonneg) {
  if (!j.is_array() || j.empty()) fail(path, "must be a non-empty array of numbers");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    v[static_cast<Eigen::Index>(i)] = number(j[i], p);
    if (nonneg && v[static_cast<Eigen::Index>(i)] < 0) fail(p, "must be nonnegative");
  }
  return v;
}

std::vector<double> double_list(const json& j, const std::string& path) {
  const VectorXd v = number_array(j, path, false);
  return {v.data(), v.data() + v.size()};
}

Kernel parse_kernel(const json& j, const std::string& path) {
  only_keys(j, path, {"family", "param"});
  if (!j.contains("family")) fail(path + ".family", "missing kernel family name");
  if (!j.at("family").is_string()) fail(path + ".family", "must be a string");
  const auto name = j.at("family").get<std::string>();
  const auto family = parse_kernel_family(name);
  if (!family) fail(path + ".family", "unknown kernel family \"" + name + "\"");
  if (!j.contains("param")) fail(path + ".param", "missing");
  const double p = positive(j.at("param"), path + ".param");
  try {
    return Kernel(*family, p);
  } catch (const std::invalid_argument& e) {
    fail(path + ".param", e.what());
  }
}

}  // namespace

ScenarioConfig parse_scenario(const json& j) {
  only_keys(j, "$", {"scenario", "reaction", "kernels", "d", "mu", "mode", "simulation",
                     "semiwave", "analysis", "checks"});
  ScenarioConfig c;
  if (!j.contains("scenario") || !j.at("scenario").is_string())
    fail("$.scenario", "missing scenario name");
  c.name = j.at("scenario").get<std::string>();

  if (!j.contains("reaction")) fail("$.reaction", "missing");
  const json& r = j.at("reaction");
  only_keys(r, "$.reaction", {"preset", "params"});
  if (!r.contains("preset") || !r.at("preset").is_string()) fail("$.reaction.preset", "missing preset name");
  c.preset = r.at("preset").get<std::string>();
  if (r.contains("params")) {
    if (!r.at("params").is_object()) fail("$.reaction.params", "must be an object");
    for (const auto& [k, v] : r.at("params").items())
      c.params[k] = number(v, "$.reaction.params." + k);
  }

  if (!j.contains("kernels")) fail("$.kernels", "missing");
  const json& ks = j.at("kernels");
  if (!ks.is_array() || ks.empty()) fail("$.kernels", "must be a non-empty array");
  for (std::size_t i = 0; i < ks.size(); ++i)
    c.kernels.push_back(parse_kernel(ks[i], "$.kernels[" + std::to_string(i) + "]"));

  if (j.contains("d")) c.d = number_array(j.at("d"), "$.d", true);
  if (j.contains("mu")) c.mu = number_array(j.at("mu"), "$.mu", true);

  if (j.contains("mode")) {
    const json& m = j.at("mode");
    if (m == "standard") c.mode = Mode::Standard;
    else if (m == "accelerated") c.mode = Mode::Accelerated;
    else fail("$.mode", "must be \"standard\" or \"accelerated\"");
  }

  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    const std::string p = "$.simulation";
    only_keys(s, p, {"h0", "u0", "dx", "cfl_factor", "T_final", "sample_dt", "snapshot_times",
                     "wall_clock_budget", "fft_threshold"});
    optional_field(s, p, "h0", c.sim.h0, positive);
    optional_field(s, p, "dx", c.sim.dx, positive);
    optional_field(s, p, "cfl_factor", c.sim.cfl_factor, positive);
    optional_field(s, p, "T_final", c.sim.T_final, [](const json& v, const std::string& q) {
      const double x = number(v, q);
      if (x < 0) fail(q, "must be nonnegative");
      return x;
    });
    optional_field(s, p, "sample_dt", c.sim.sample_dt, positive);
    optional_field(s, p, "wall_clock_budget", c.sim.wall_clock_budget, positive);
    optional_field(s, p, "fft_threshold", c.sim.fft_threshold, [](const json& v, const std::string& q) {
      return static_cast<Eigen::Index>(positive(v, q));
    });
    if (s.contains("snapshot_times")) {
      c.sim.snapshot_times = double_list(s.at("snapshot_times"), p + ".snapshot_times");
      for (std::size_t i = 0; i < c.sim.snapshot_times.size(); ++i)
        if (c.sim.snapshot_times[i] < 0 || c.sim.snapshot_times[i] > c.sim.T_final)
          fail(p + ".snapshot_times[" + std::to_string(i) + "]", "outside [0, T_final]");
    }
    if (s.contains("u0")) {
      const json& u = s.at("u0");
      only_keys(u, p + ".u0", {"shape", "amplitude"});
      if (u.contains("shape")) {
        if (!u.at("shape").is_string()) fail(p + ".u0.shape", "must be a string");
        const auto shape = parse_initial_shape(u.at("shape").get<std::string>());
        if (!shape) fail(p + ".u0.shape", "must be one of cosine2, bump, constant");
        c.sim.shape = *shape;
      }
      if (u.contains("amplitude")) {
        const json& a = u.at("amplitude");
        c.sim.amplitude = a.is_array() ? number_array(a, p + ".u0.amplitude", true)
                                       : VectorXd::Constant(1, positive(a, p + ".u0.amplitude"));
      }
    }
  }

  if (j.contains("semiwave")) {
    const json& s = j.at("semiwave");
    const std::string p = "$.semiwave";
    only_keys(s, p, {"L", "dx", "tol", "tol_c", "eps0", "max_rungs", "max_iterations", "c",
                     "c_grid", "refine_steps"});
    optional_field(s, p, "L", c.semiwave.L, positive);
    optional_field(s, p, "dx", c.semiwave.dx, positive);
    optional_field(s, p, "tol", c.semiwave.tol, positive);
    optional_field(s, p, "tol_c", c.tol_c, positive);
    optional_field(s, p, "eps0", c.semiwave.eps0, positive);
    auto count = [](const json& v, const std::string& q) {
      if (!v.is_number_integer() || v.get<long long>() < 1) fail(q, "must be a positive integer");
      return static_cast<int>(v.get<long long>());
    };
    optional_field(s, p, "max_rungs", c.semiwave.max_rungs, count);
    optional_field(s, p, "max_iterations", c.semiwave.max_iterations, count);
    if (s.contains("refine_steps")) {
      const json& v = s.at("refine_steps");
      if (!v.is_number_integer() || v.get<long long>() < 0) fail(p + ".refine_steps", "must be a nonnegative integer");
      c.refine_steps = static_cast<int>(v.get<long long>());
    }
    if (s.contains("c")) c.c = positive(s.at("c"), p + ".c");
    if (s.contains("c_grid")) {
      c.c_grid = double_list(s.at("c_grid"), p + ".c_grid");
      for (std::size_t i = 0; i < c.c_grid.size(); ++i) {
        const std::string q = p + ".c_grid[" + std::to_string(i) + "]";
        if (!(c.c_grid[i] > 0)) fail(q, "must be positive");
        if (i > 0 && !(c.c_grid[i] > c.c_grid[i - 1])) fail(q, "must be increasing");
      }
    }
  }

  if (j.contains("analysis")) {
    const json& a = j.at("analysis");
    const std::string p = "$.analysis";
    only_keys(a, p, {"window_fraction", "exclude_end", "c0"});
    optional_field(a, p, "window_fraction", c.window_fraction, positive);
    if (c.window_fraction > 1) fail(p + ".window_fraction", "must lie in (0, 1]");
    if (a.contains("exclude_end")) {
      c.exclude_end = number(a.at("exclude_end"), p + ".exclude_end");
      if (c.exclude_end < 0 || c.exclude_end >= c.window_fraction)
        fail(p + ".exclude_end", "must lie in [0, window_fraction)");
    }
    if (a.contains("c0")) c.c0 = positive(a.at("c0"), p + ".c0");
  }

  if (j.contains("checks")) {
    const json& k = j.at("checks");
    only_keys(k, "$.checks", {"samples", "seed"});
    if (k.contains("samples")) {
      const json& v = k.at("samples");
      if (!v.is_number_integer() || v.get<long long>() < 1) fail("$.checks.samples", "must be a positive integer");
      c.check_samples = static_cast<int>(v.get<long long>());
    }
    if (k.contains("seed")) {
      const json& v = k.at("seed");
      if (!v.is_number_unsigned()) fail("$.checks.seed", "must be a nonnegative integer");
      c.seed = v.get<std::uint64_t>();
    }
  }

  // fails here rather than deep inside a run
  const ReactionSystem sys = build_system(c);
  if (static_cast<int>(c.kernels.size()) != 1 && static_cast<int>(c.kernels.size()) != sys.m0)
    fail("$.kernels", "need 1 or m0 = " + std::to_string(sys.m0) + " kernels");
  if (c.sim.amplitude.size() > 1 && c.sim.amplitude.size() != sys.m)
    fail("$.simulation.u0.amplitude", "needs 1 or m = " + std::to_string(sys.m) + " entries");
  if (!(sys.mu.head(sys.m0).sum() > 0)) fail("$.mu", "sum of mu over diffusing species must be positive");
  return c;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
}

ScenarioConfig load_scenario(const std::filesystem::path& path) { return parse_scenario(read_json(path)); }

ReactionSystem build_system(const ScenarioConfig& c) {
  auto param = [&](const char* key, double def) {
    auto it = c.params.find(key);
    return it == c.params.end() ? def : it->second;
  };
  auto check_params = [&](std::initializer_list<const char*> keys) {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : c.params)
      if (!allowed.count(k)) fail("$.reaction.params." + k, "unknown parameter for preset " + c.preset);
  };
  ReactionSystem sys;
  try {
    if (c.preset == "fisher-kpp") {
      check_params({"a", "b", "p"});
      sys = fisher_kpp(param("a", 1.0), param("b", 1.0), param("p", 2.0));
    } else if (c.preset == "west-nile") {
      check_params({"a1", "a2", "b1", "b2", "e1", "e2"});
      sys = west_nile(param("a1", 1.0), param("a2", 1.0), param("b1", 0.25), param("b2", 0.25),
                      param("e1", 1.0), param("e2", 1.0));
    } else if (c.preset == "epidemic") {
      check_params({"a", "b", "c", "g0", "k"});
      sys = epidemic(param("a", 1.0), param("b", 1.0), param("c", 1.0), param("g0", 2.0), param("k", 1.0));
    } else {
      fail("$.reaction.preset", "unknown preset \"" + c.preset + "\" (fisher-kpp, west-nile, epidemic)");
    }
  } catch (const ValidationError& e) {
    if (std::string(e.what()).rfind("config ", 0) == 0) throw;
    fail("$.reaction.params", e.what());
  }
  if (c.d) {
    if (c.d->size() != sys.m) fail("$.d", "needs m = " + std::to_string(sys.m) + " entries");
    if (sys.m0 < sys.m && (c.d->tail(sys.m - sys.m0).array() != 0).any())
      fail("$.d", "non-diffusing species must have d = 0");
    sys.D = *c.d;
  }
  if (c.mu) {
    if (c.mu->size() != sys.m) fail("$.mu", "needs m = " + std::to_string(sys.m) + " entries");
    if (sys.m0 < sys.m && (c.mu->tail(sys.m - sys.m0).array() != 0).any())
      fail("$.mu", "non-diffusing species must have mu = 0");
    sys.mu = *c.mu;
  }
  return sys;
}

}  // namespace nlfb::cli
