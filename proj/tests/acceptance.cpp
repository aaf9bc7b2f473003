// Acceptance runs on the shipped configs. Usage: acceptance <work_dir> <n>...
// Prints one PASS/FAIL line per criterion; exit status 1 if any failed.
//
// Simulations and speeds are cached in work_dir so criteria sharing a run do
// not repeat it; ctest wipes work_dir before the suite.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <unistd.h>

#include <boost/math/tools/minima.hpp>

#include "io.hpp"
#include "nlfb/asymptotics.hpp"
#include "nlfb/fbsolver.hpp"
#include "nlfb/semiwave.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"
#include "scenario.hpp"

using namespace nlfb;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path config_dir = NLFB_CONFIG_DIR;
fs::path work_dir;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

cli::ScenarioConfig config(const std::string& name) {
  return cli::load_scenario(config_dir / (name + ".json"));
}

void publish(const fs::path& tmp, const fs::path& final) {
  std::error_code ec;
  fs::rename(tmp, final, ec);
  if (ec) fs::remove_all(tmp);
}

fs::path private_tmp(const std::string& stem) {
  return work_dir / (stem + ".tmp" + std::to_string(::getpid()));
}

struct SpeedEntry {
  double c0 = 0.0, flux = 0.0, seconds = 0.0, L_used = 0.0;
};

SpeedEntry speed_of(const std::string& name) {
  const fs::path path = work_dir / (name + ".c0.json");
  if (!fs::exists(path)) {
    const auto cfg = config(name);
    const auto prob = make_semiwave_problem(cli::build_system(cfg), cfg.kernels);
    const auto t0 = std::chrono::steady_clock::now();
    const C0Result r = find_c0(prob, cfg.tol_c, cfg.semiwave);
    const json j = {{"c0", r.c0}, {"flux", r.flux_at_c0}, {"seconds", seconds_since(t0)},
                    {"L_used", r.at_c0.L_used}};
    const fs::path tmp = private_tmp(name + ".c0");
    cli::write_json(tmp, j);
    publish(tmp, path);
  }
  const json j = cli::read_json(path);
  return {j["c0"], j["flux"], j["seconds"], j["L_used"]};
}

struct SimEntry {
  cli::TrajectorySeries series;
  json report;
  double seconds = 0.0;
};

SimEntry sim_of(const std::string& name) {
  const fs::path dir = work_dir / name;
  if (!fs::exists(dir)) {
    cli::RunOptions opt;
    opt.out_dir = private_tmp(name);
    const auto t0 = std::chrono::steady_clock::now();
    cli::simulate(config(name), opt);
    cli::write_json(opt.out_dir / "wall.json", {{"seconds", seconds_since(t0)}});
    publish(opt.out_dir, dir);
  }
  SimEntry s;
  s.series = cli::read_trajectory_csv(dir / "trajectory.csv");
  s.report = cli::read_json(dir / "run_report.json");
  s.seconds = cli::read_json(dir / "wall.json")["seconds"];
  return s;
}

const std::vector<std::string> simulated = {"fisher-kpp-laplace", "west-nile", "epidemic",
                                            "algebraic-1.5",      "algebraic-2.0", "algebraic-2.5",
                                            "algebraic-3.5"};

FitWindow window_for(const cli::ScenarioConfig& cfg, const VectorXd& t) {
  return trailing_window(t, cfg.window_fraction, cfg.exclude_end);
}

Verdict speed_agreement(const std::string& name, double bound, double time_limit) {
  const auto cfg = config(name);
  const SpeedEntry c = speed_of(name);
  const SimEntry s = sim_of(name);
  const FitWindow w = window_for(cfg, s.series.t);
  const double hs = fit_linear_speed(s.series.t, s.series.h, w).slope;
  const double gs = fit_linear_speed(s.series.t, VectorXd(-s.series.g), w).slope;
  const double hgap = std::abs(hs - c.c0) / c.c0, ggap = std::abs(gs - c.c0) / c.c0;
  const double secs = c.seconds + s.seconds;
  return {hgap <= bound && ggap <= bound && secs <= time_limit,
          fmt("%s c0=%.5f h-slope=%.5f (gap %.2f%%) g-slope=%.5f (gap %.2f%%) bound %.0f%%, %.0fs",
              name.c_str(), c.c0, hs, 100 * hgap, gs, 100 * ggap, 100 * bound, secs)};
}

Verdict both(Verdict a, const Verdict& b) {
  return {a.pass && b.pass, a.detail + "; " + b.detail};
}

// ---------------------------------------------------------------------------

Verdict c1() { return speed_agreement("fisher-kpp-laplace", 0.05, 300.0); }

Verdict c2() {
  const auto cfg = config("fisher-kpp-laplace");
  const SpeedEntry c = speed_of("fisher-kpp-laplace");
  const double gap = std::abs(c.c0 - c.flux);
  return {cfg.tol_c == 1e-4 && gap <= 2 * cfg.tol_c,
          fmt("|c0 - M(c0)| = %.2e, bound 2 tol_c = %.1e", gap, 2 * cfg.tol_c)};
}

// Linear threshold of logistic growth with a unit-rate Laplace kernel:
// min over lambda of (int J(x) e^{lambda x} dx - 1 + 1) / lambda, by quadrature.
double cstar_oracle() {
  auto speed = [](double lambda) {
    const double mgf =
        oracle::integrate([&](double x) { return 0.5 * std::exp(-(1 - lambda) * x); }, 0, oracle::inf) +
        oracle::integrate([&](double x) { return 0.5 * std::exp(-(1 + lambda) * x); }, 0, oracle::inf);
    return mgf / lambda;
  };
  return boost::math::tools::brent_find_minima(speed, 0.05, 0.95, 40).second;
}

Verdict c3() {
  const auto cfg = config("fisher-kpp-laplace");
  const auto prob = make_semiwave_problem(cli::build_system(cfg), cfg.kernels);
  auto t0 = std::chrono::steady_clock::now();
  const CstarBracket b = bracket_Cstar(prob, cfg.c_grid, cfg.semiwave, cfg.refine_steps);
  const double t_thin = seconds_since(t0);
  const double cs = cstar_oracle();
  bool decreasing = true;
  double last = 0.0;
  std::string maxima;
  for (std::size_t k = 0; k < b.scan.size(); ++k) {
    if (b.scan[k].c > b.lo) break;
    if (k > 0 && !(b.scan[k].local_max < b.scan[k - 1].local_max)) decreasing = false;
    last = b.scan[k].local_max;
    maxima += fmt(" %.3g", last);
  }
  const double u1 = prob.u_star[0];
  const bool thin = !b.unbounded && b.lo < cs && cs <= b.hi && decreasing && last < 0.05 * u1 &&
                    t_thin <= 120.0;

  const auto hcfg = config("algebraic-2.5");
  const auto heavy = make_semiwave_problem(cli::build_system(hcfg), hcfg.kernels);
  t0 = std::chrono::steady_clock::now();
  const CstarBracket hb = bracket_Cstar(heavy, hcfg.c_grid, hcfg.semiwave);
  const double t_heavy = seconds_since(t0);
  return {thin && hb.unbounded && hcfg.c_grid.size() <= 4 && t_heavy <= 120.0,
          fmt("Laplace bracket [%g, %g] around C* = %.6f, local maxima%s (last < %.3g), %.0fs; "
              "Algebraic(2.5) %s, %.0fs",
              b.lo, b.hi, cs, maxima.c_str(), 0.05 * u1, t_thin,
              hb.unbounded ? "unbounded" : "bounded", t_heavy)};
}

// Entries where `lower` exceeds `upper` by more than slack.
int order_violations(const MatrixXd& lower, const MatrixXd& upper, double slack) {
  return static_cast<int>(((lower - upper).array() > slack).count());
}

int decrease_violations(const SemiWaveProfile& p, const VectorXd& u_star) {
  int bad = 0;
  for (Eigen::Index i = 0; i < p.values.rows(); ++i)
    for (Eigen::Index j = 0; j + 1 < p.nodes(); ++j) {
      if (u_star[i] - p.values(i, j) <= 1e-4 * u_star[i]) continue;
      if (p.values(i, j) - p.values(i, j + 1) < 1e-8) ++bad;
    }
  return bad;
}

Verdict c4() {
  const auto cfg = config("fisher-kpp-laplace");
  const auto prob = make_semiwave_problem(cli::build_system(cfg), cfg.kernels);
  const SemiWaveOptions& o = cfg.semiwave;
  const double slack = 10 * o.tol;
  int ladder = 0, speeds = 0, shape = 0;

  std::vector<SemiWaveProfile> rungs;
  for (int n = 0; n < 6; ++n) rungs.push_back(solve_perturbed(prob, 1.0, o.eps0 * std::ldexp(1.0, -n), o));
  for (std::size_t n = 1; n < rungs.size(); ++n)
    ladder += order_violations(rungs[n].values, rungs[n - 1].values, slack);

  std::vector<SemiWaveProfile> profiles;
  for (double c : {0.5, 1.0, 1.5}) profiles.push_back(*solve_semiwave(prob, c, o).profile);
  for (std::size_t k = 1; k < profiles.size(); ++k)
    speeds += order_violations(profiles[k].values, profiles[k - 1].values, slack);

  for (const auto& p : rungs) shape += decrease_violations(p, prob.u_star);
  for (const auto& p : profiles) shape += decrease_violations(p, prob.u_star);
  return {ladder == 0 && speeds == 0 && shape == 0,
          fmt("violations: ladder %d (6 rungs at c = 1), speeds %d (c = 0.5, 1, 1.5), "
              "strict decrease %d; order slack %.0e",
              ladder, speeds, shape, slack)};
}

Verdict c5() {
  const auto cfg = config("fisher-kpp-laplace");
  const auto prob = make_semiwave_problem(cli::build_system(cfg), cfg.kernels);
  const SemiWaveResult r = solve_semiwave(prob, speed_of("fisher-kpp-laplace").c0, cfg.semiwave);
  const TailReport t = tail_report(*r.profile, prob.u_star[0]);

  const auto acfg = config("algebraic-3.5");
  const auto aprob = make_semiwave_problem(cli::build_system(acfg), acfg.kernels);
  const SemiWaveResult ar = solve_semiwave(aprob, speed_of("algebraic-3.5").c0, acfg.semiwave);
  const TailReport a = tail_report(*ar.profile, aprob.u_star[0]);
  return {t.kind == TailKind::Exponential && t.r2_exponential > 0.99 && a.kind == TailKind::Algebraic &&
              a.rate >= 2.0 && a.rate <= 3.0,
          fmt("Laplace tail %s, R2 %.5f, rate %.4f; Algebraic(3.5) tail %s, exponent %.3f in [2, 3]",
              std::string(to_string(t.kind)).c_str(), t.r2_exponential, t.rate,
              std::string(to_string(a.kind)).c_str(), a.rate)};
}

Verdict c6() {
  const auto c15 = config("algebraic-1.5");
  const SimEntry s15 = sim_of("algebraic-1.5");
  const GrowthOrder g = fit_growth_order(s15.series.t, s15.series.h, window_for(c15, s15.series.t));
  const Verdict a{g.p >= 1.7 && g.p <= 2.3 && s15.seconds <= 900.0,
                  fmt("Algebraic(1.5) exponent %.3f in [1.7, 2.3], %.0fs", g.p, s15.seconds)};

  const auto c20 = config("algebraic-2.0");
  const SimEntry s20 = sim_of("algebraic-2.0");
  const RatioRange r = tlnt_ratio(s20.series.t, s20.series.h, trailing_window(s20.series.t, 0.5, 0.0));
  const double factor = r.max / r.min;
  const Verdict b{factor <= 2.0 && s20.seconds <= 900.0,
                  fmt("Algebraic(2.0) h/(t ln t) in [%.4f, %.4f], factor %.3f <= 2, %.0fs", r.min,
                      r.max, factor, s20.seconds)};
  return both(a, b);
}

Verdict c7() {
  const auto cfg = config("algebraic-3.5");
  const SpeedEntry c = speed_of("algebraic-3.5");
  const SimEntry s = sim_of("algebraic-3.5");
  const VectorXd& t = s.series.t;
  const double T = t[t.size() - 1];
  auto range = [&](double lo, double hi) {
    double mn = INFINITY, mx = -INFINITY;
    for (Eigen::Index k = 0; k < t.size(); ++k) {
      if (t[k] < lo || t[k] > hi) continue;
      const double lag = c.c0 * t[k] - (s.series.h[k] - s.series.h[0]);
      mn = std::min(mn, lag);
      mx = std::max(mx, lag);
    }
    return mx - mn;
  };
  const double full = range(T / 2, T), early = range(T / 2, 0.75 * T);
  const double growth = full - early;
  const double band = 5 * cfg.sim.dx;
  const double secs = c.seconds + s.seconds;
  return {growth <= band && secs <= 900.0,
          fmt("lag band over [T/2, T] %.4f, over [T/2, 3T/4] %.4f, growth %.4f <= 5 dx = %.3f, %.0fs",
              full, early, growth, band, secs)};
}

Verdict c8() {
  const auto cfg = config("algebraic-2.5");
  const SpeedEntry c = speed_of("algebraic-2.5");
  const SimEntry s = sim_of("algebraic-2.5");
  const LagFit f = fit_lag(s.series.t, VectorXd(s.series.h.array() - s.series.h[0]), c.c0,
                           window_for(cfg, s.series.t));
  return {f.power_q >= 0.35 && f.power_q <= 0.65,
          fmt("power-model exponent %.3f +- %.3f in [0.35, 0.65] (R2 power %.5f, log %.5f, "
              "selected %s); c0 %.5f on L = %g, %.0fs",
              f.power_q, f.power_q_stderr, f.r2_power, f.r2_log,
              std::string(to_string(f.model)).c_str(), c.c0, c.L_used, c.seconds + s.seconds)};
}

Verdict c9() {
  bool ok = true;
  std::string detail;
  for (const auto& name : simulated) {
    const json r = sim_of(name).report;
    const double up = r["max_sandwich_excess"], low = r["min_before_clamp"];
    const bool pass = up <= 1e-6 && low >= -1e-6;
    ok = ok && pass;
    detail += fmt("%s%s U-W %.1e, min U %.1e", detail.empty() ? "" : "; ", name.c_str(), up, low);
  }
  return {ok, detail};
}

Verdict c10() {
  double worst = 0.0;
  std::string detail;
  for (const Kernel& k : {Kernel::laplace(1.0), Kernel::gaussian(0.7), Kernel::algebraic(2.5)}) {
    const FbModel fft(fisher_kpp(), {k}, 0.05, 16);
    const FbModel direct(fisher_kpp(), {k}, 0.05, 1 << 30);
    const FrontierState s = initial_state(fft, 4.9, InitialShape::Cosine2, VectorXd::Ones(1), 0.05);
    const MatrixXd a = rhs(fft, s, s.values, LatticeConvolution::Path::Fft);
    const MatrixXd b = rhs(direct, s, s.values, LatticeConvolution::Path::Direct);
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
    if (s.active() > 200) return {false, "test state exceeds 200 nodes"};
  }
  detail = fmt("FFT vs direct rhs %.2e (N <= 200, 3 kernels)", worst);

  const auto cfg = config("fisher-kpp-laplace");
  const auto prob = make_semiwave_problem(cli::build_system(cfg), cfg.kernels);
  const SemiWaveResult r = solve_semiwave(prob, speed_of("fisher-kpp-laplace").c0, cfg.semiwave);
  const double res = r.profile->residual;
  return {worst <= 1e-10 && res <= 5 * cfg.semiwave.tol,
          detail + fmt("; semi-wave residual %.2e <= 5 tol = %.0e", res, 5 * cfg.semiwave.tol)};
}

Verdict c11() {
  return both(speed_agreement("west-nile", 0.08, INFINITY), speed_agreement("epidemic", 0.08, INFINITY));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Verdict c12() {
  double sym = 0.0, dx = INFINITY;
  for (const auto& name : simulated) {
    const json r = sim_of(name).report;
    sym = std::max(sym, r["max_abs_g_plus_h"].get<double>());
    dx = std::min(dx, r["dx"].get<double>());
  }

  const auto cfg = config("fisher-kpp-laplace");
  cli::RunOptions o1, o2;
  o1.out_dir = private_tmp("rerun-a");
  o2.out_dir = private_tmp("rerun-b");
  cli::run_scenario(cfg, o1);
  cli::run_scenario(cfg, o2);
  int files = 0, differing = 0;
  for (const auto& e : fs::directory_iterator(o1.out_dir)) {
    ++files;
    const fs::path other = o2.out_dir / e.path().filename();
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differing;
  }
  fs::remove_all(o1.out_dir);
  fs::remove_all(o2.out_dir);
  return {sym < dx && differing == 0 && files > 0,
          fmt("max |g + h| = %.2e < dx = %g over %zu runs; rerun: %d of %d files differ", sym, dx,
              simulated.size(), differing, files)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <work_dir> <criterion>...\n");
    return 2;
  }
  work_dir = argv[1];
  fs::create_directories(work_dir);
  const std::map<int, std::function<Verdict()>> criteria = {
      {1, c1}, {2, c2}, {3, c3}, {4, c4},  {5, c5},   {6, c6},
      {7, c7}, {8, c8}, {9, c9}, {10, c10}, {11, c11}, {12, c12}};
  std::vector<int> wanted;
  for (int i = 2; i < argc; ++i) {
    if (std::string(argv[i]) == "all") {
      for (const auto& [n, f] : criteria) wanted.push_back(n);
    } else {
      wanted.push_back(std::stoi(argv[i]));
    }
  }
  bool all = true;
  for (int n : wanted) {
    Verdict v;
    try {
      v = criteria.at(n)();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    all = all && v.pass;
    std::printf("criterion %2d %s  %s\n", n, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
