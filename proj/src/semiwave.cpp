#include "nlfb/semiwave.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "nlfb/convolution.hpp"
#include "nlfb/errors.hpp"
#include "nlfb/regression.hpp"

namespace nlfb {

std::string_view to_string(Regime r) {
  return r == Regime::SemiWave ? "semi-wave" : "traveling-wave";
}

std::string_view to_string(TailKind k) {
  switch (k) {
    case TailKind::Exponential: return "exponential";
    case TailKind::Algebraic: return "algebraic";
    case TailKind::Flat: return "flat";
  }
  return "flat";
}

SemiWaveProblem make_semiwave_problem(const ReactionSystem& system, std::vector<Kernel> kernels) {
  if (kernels.empty()) throw ValidationError("semiwave: at least one kernel is required");
  if (kernels.size() == 1 && system.m0 > 1) kernels.resize(system.m0, kernels.front());
  if (static_cast<int>(kernels.size()) != system.m0)
    throw ValidationError("semiwave: need one kernel per diffusing species");
  if (system.D.size() != system.m || system.mu.size() != system.m)
    throw ValidationError("semiwave: D and mu must have m entries");
  if ((system.D.array() < 0).any() || (system.mu.array() < 0).any())
    throw ValidationError("semiwave: D and mu must be nonnegative");
  if (system.m0 < system.m &&
      (system.D.tail(system.m - system.m0).array() != 0.0 ||
       system.mu.tail(system.m - system.m0).array() != 0.0).any())
    throw ValidationError("semiwave: d_i and mu_i must vanish for non-diffusing species");
  if (!(system.mu.sum() > 0)) throw ValidationError("semiwave: sum of mu must be positive");

  SemiWaveProblem p;
  p.system = system;
  p.kernels = std::move(kernels);
  p.u_star = find_equilibrium(system);
  const EigenPair ep = principal_eigenpair(jacobian(system, VectorXd::Zero(system.m)));
  if (!(ep.lambda1 > 0))
    throw ValidationError("semiwave: principal eigenvalue of gradF(0) must be positive");
  p.theta = ep.theta;
  p.lipschitz = lipschitz_bound(system, sampling_box(system, p.u_star));
  return p;
}

double picard_M(const SemiWaveProblem& problem, double c) {
  return (problem.system.D.maxCoeff() + problem.lipschitz) / c + 1.0;
}

namespace {

// Geometry and cached weights for one (L, dx).
struct Grid {
  Grid(const SemiWaveProblem& p, double L, double dx) : problem(p), L(L), dx(dx) {
    if (!(L > 0 && dx > 0)) throw ValidationError("semiwave: L and dx must be positive");
    const double cells = L / dx;
    N = static_cast<Eigen::Index>(std::llround(cells));
    if (N < 2 || std::abs(cells - static_cast<double>(N)) > 1e-9 * cells)
      throw ValidationError("semiwave: L must be a multiple of dx");
    const int m = p.system.m;
    conv.resize(m);
    ext = MatrixXd::Zero(m, N + 1);
    for (int i = 0; i < p.system.m0; ++i) {
      if (p.system.D[i] == 0.0) continue;
      for (int k = 0; k < i; ++k)
        if (conv[k] && conv[k]->kernel().family() == p.kernels[i].family() &&
            conv[k]->kernel().param() == p.kernels[i].param())
          conv[i] = conv[k];
      if (!conv[i]) conv[i] = std::make_shared<LatticeConvolution>(p.kernels[i], dx);
      for (Eigen::Index j = 0; j <= N; ++j) ext(i, j) = conv[i]->extension(j);
    }
  }

  double x(Eigen::Index j) const { return -L + static_cast<double>(j) * dx; }

  const VectorXd& exp_Mx(double M) const {
    if (M != cached_M) {
      cached_M = M;
      exp_table.resize(N + 1);
      for (Eigen::Index j = 0; j <= N; ++j) exp_table[j] = std::exp(M * x(j));
    }
    return exp_table;
  }

  const SemiWaveProblem& problem;
  double L, dx;
  Eigen::Index N = 0;
  std::vector<std::shared_ptr<LatticeConvolution>> conv;
  MatrixXd ext;  // ext(i, j): constant-extension weight j cells from the end
  mutable double cached_M = -1.0;
  mutable VectorXd exp_table;
};

// P[Gamma] on the grid; Gamma is extended by Gamma(-L) on the left and by
// delta on the right.
MatrixXd apply_core(const Grid& G, const MatrixXd& Gamma, double c, double M,
                    const VectorXd& delta) {
  const auto& sys = G.problem.system;
  const Eigen::Index n = G.N + 1;
  MatrixXd g = evaluate_F_block(sys, Gamma);
  for (int i = 0; i < sys.m; ++i) {
    g.row(i) += (c * M - sys.D[i]) * Gamma.row(i);
    if (!G.conv[i]) continue;
    VectorXd conv = G.conv[i]->apply(Gamma.row(i).transpose());
    for (Eigen::Index j = 0; j < n; ++j)
      conv[j] += Gamma(i, 0) * G.ext(i, j) + delta[i] * G.ext(i, G.N - j);
    g.row(i) += sys.D[i] * conv.transpose();
  }

  // int_{x_j}^0 e^{-M(xi - x_j)} g(xi) dxi with g linear per cell
  const double h = G.dx;
  const double Mh = M * h;
  const double decay = std::exp(-Mh);
  const double a0 = -std::expm1(-Mh) / M;
  const double a1 = (-std::expm1(-Mh) - Mh * decay) / (M * M);
  const VectorXd& eMx = G.exp_Mx(M);
  MatrixXd out(sys.m, n);
  for (int i = 0; i < sys.m; ++i) {
    double Q = 0.0;
    out(i, G.N) = delta[i];
    for (Eigen::Index j = G.N - 1; j >= 0; --j) {
      Q = decay * Q + g(i, j) * a0 + (g(i, j + 1) - g(i, j)) * a1 / h;
      out(i, j) = eMx[j] * delta[i] + Q / c;
    }
  }
  return out;
}

struct IterationOutcome {
  MatrixXd values;
  int iterations = 0;
  double residual = 0.0;
};

// Picard iteration from `start`; `upward` selects which ordering in n is
// asserted (nondecreasing from a subsolution, nonincreasing from a
// supersolution).
IterationOutcome iterate(const Grid& G, MatrixXd start, double c, double M, const VectorXd& delta,
                         double tol, int max_iterations, bool upward) {
  const double slack = std::max(10.0 * tol, 1e-8);
  IterationOutcome r;
  MatrixXd cur = std::move(start);
  double prev_diff = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iterations; ++it) {
    MatrixXd next = apply_core(G, cur, c, M, delta);
    const MatrixXd step = next - cur;
    const double order_violation = upward ? -step.minCoeff() : step.maxCoeff();
    if (order_violation > slack) {
      std::ostringstream os;
      os << "solve_perturbed: Picard iterates not monotone in n (violation " << order_violation
         << " at iteration " << it << "); refine dx";
      throw MonotonicityError(os.str());
    }
    const double rise =
        (next.rightCols(G.N) - next.leftCols(G.N)).maxCoeff();
    if (rise > slack) {
      std::ostringstream os;
      os << "solve_perturbed: iterate increasing in x by " << rise << "; refine dx";
      throw MonotonicityError(os.str());
    }
    // roundoff below the slack is projected back onto the order
    if (upward) next = next.cwiseMax(cur);
    else next = next.cwiseMin(cur);
    const double diff = (next - cur).cwiseAbs().maxCoeff();
    cur = std::move(next);
    // growth from a tiny delta starts with small but increasing steps
    const bool contracting = it > 1 && diff <= prev_diff;
    prev_diff = diff;
    if (diff <= tol && contracting) {
      r.iterations = it;
      r.residual = (apply_core(G, cur, c, M, delta) - cur).cwiseAbs().maxCoeff();
      r.values = std::move(cur);
      return r;
    }
  }
  throw NonConvergenceError("solve_perturbed: Picard iteration cap reached");
}

SemiWaveProfile make_profile(const Grid& G, double c, const VectorXd& delta, IterationOutcome out,
                             const VectorXd& u_star, double tol_left_rel) {
  SemiWaveProfile p;
  p.L = G.L;
  p.dx = G.dx;
  p.c = c;
  p.delta = delta;
  p.values = std::move(out.values);
  p.iterations = out.iterations;
  p.residual = out.residual;
  const double gap = (u_star - p.values.col(0)).maxCoeff();
  p.converged_left = gap <= tol_left_rel * u_star.lpNorm<Eigen::Infinity>();
  return p;
}

VectorXd perturbation(const SemiWaveProblem& problem, double eps) {
  const VectorXd delta = eps * problem.theta;
  if (!(problem.system.F(delta).array() > 0).all()) {
    std::ostringstream os;
    os << "semiwave: F(eps Theta) is not strictly positive for eps = " << eps;
    throw ValidationError(os.str());
  }
  return delta;
}

SemiWaveProfile perturbed_on(const Grid& G, double c, double eps, const SemiWaveOptions& opt) {
  if (!(c > 0)) throw ValidationError("semiwave: c must be positive");
  if (!(eps > 0)) throw ValidationError("semiwave: eps must be positive");
  const VectorXd delta = perturbation(G.problem, eps);
  const double M = picard_M(G.problem, c);
  MatrixXd start = delta.replicate(1, G.N + 1);
  auto out = iterate(G, std::move(start), c, M, delta, opt.tol, opt.max_iterations, true);
  return make_profile(G, c, delta, std::move(out), G.problem.u_star, opt.tol_left_rel);
}

}  // namespace

SemiWaveProfile apply_P(const SemiWaveProblem& problem, const SemiWaveProfile& profile, double M) {
  const Grid G(problem, profile.L, profile.dx);
  if (profile.values.rows() != problem.system.m || profile.values.cols() != G.N + 1)
    throw ValidationError("apply_P: profile shape does not match its grid");
  SemiWaveProfile out = profile;
  out.values = apply_core(G, profile.values, profile.c, M, profile.delta);
  return out;
}

SemiWaveProfile solve_perturbed(const SemiWaveProblem& problem, double c, double eps,
                                const SemiWaveOptions& opt) {
  const Grid G(problem, opt.L, opt.dx);
  return perturbed_on(G, c, eps, opt);
}

std::optional<double> half_level_shift(const SemiWaveProfile& profile, double u1_star) {
  const double half = 0.5 * u1_star;
  const auto row = profile.values.row(0);
  for (Eigen::Index j = profile.nodes() - 1; j >= 0; --j) {
    if (row[j] >= half) {
      if (j == profile.nodes() - 1) return profile.x(j);
      const double frac = (row[j] - half) / (row[j] - row[j + 1]);
      return profile.x(j) + frac * profile.dx;
    }
  }
  return std::nullopt;
}

SemiWaveResult solve_semiwave(const SemiWaveProblem& problem, double c, const SemiWaveOptions& opt) {
  SemiWaveOptions o = opt;
  const double u1 = problem.u_star[0];
  for (int attempt = 0; attempt < 2; ++attempt, o.L *= 2.0) {
    const Grid G(problem, o.L, o.dx);
    SemiWaveResult res;
    res.L_used = o.L;
    std::optional<SemiWaveProfile> finest;
    bool stable = false;
    for (int n = 0; n < o.max_rungs; ++n) {
      const double eps = o.eps0 * std::ldexp(1.0, -n);
      SemiWaveProfile prof = perturbed_on(G, c, eps, o);
      const auto shift = half_level_shift(prof, u1);
      if (!shift || *shift < -o.escape_fraction * o.L) {
        res.shift_history.push_back(shift ? *shift : -std::numeric_limits<double>::infinity());
        res.regime = Regime::TravelingWave;
        return res;
      }
      res.shift_history.push_back(*shift);
      finest = std::move(prof);
      const auto& s = res.shift_history;
      const std::size_t k = s.size();
      if (k >= 3 && std::abs(s[k - 1] - s[k - 2]) < o.dx && std::abs(s[k - 2] - s[k - 3]) < o.dx) {
        stable = true;
        break;
      }
    }
    if (!stable) {
      std::ostringstream os;
      os << "solve_semiwave: shift neither stabilised nor escaped over " << o.max_rungs
         << " rungs at c = " << c << " (last shift " << res.shift_history.back()
         << "); enlarge L";
      throw AmbiguousRegimeError(os.str());
    }

    const VectorXd zero = VectorXd::Zero(problem.system.m);
    IterationOutcome out = iterate(G, finest->values, c, picard_M(problem, c), zero, o.tol,
                                   o.max_iterations, false);
    SemiWaveProfile limit =
        make_profile(G, c, zero, std::move(out), problem.u_star, o.tol_left_rel);
    if (!limit.converged_left && attempt == 0) continue;
    if (!limit.converged_left) {
      std::ostringstream os;
      os << "solve_semiwave: profile does not reach u* at x = -L even with L = " << o.L;
      throw AmbiguousRegimeError(os.str());
    }
    res.regime = Regime::SemiWave;
    res.profile = std::move(limit);
    return res;
  }
  throw AmbiguousRegimeError("solve_semiwave: unreachable");
}

ExtendedReal flux_functional(const SemiWaveProblem& problem, const SemiWaveProfile& profile) {
  const auto& sys = problem.system;
  double total = 0.0;
  for (int i = 0; i < sys.m0; ++i) {
    if (sys.mu[i] == 0.0) continue;
    const Kernel& k = problem.kernels[i];
    const ExtendedReal far = tail_integral(k, profile.L);
    if (far.is_infinite()) return far;
    double s = 0.0;
    // cell [x_j, x_{j+1}] maps to z = -x in [-x_{j+1}, -x_j]
    for (Eigen::Index j = 0; j + 1 < profile.nodes(); ++j) {
      const auto [w_near, w_far] = tail_segment_weights(k, -profile.x(j + 1), -profile.x(j));
      s += w_near * profile.values(i, j + 1) + w_far * profile.values(i, j);
    }
    // constant continuation by phi_i(-L), as in the operator P
    s += profile.values(i, 0) * far.value();
    total += sys.mu[i] * s;
  }
  return ExtendedReal::finite(total);
}

namespace {

void require_J1(const SemiWaveProblem& problem) {
  for (int i = 0; i < problem.system.m0; ++i) {
    if (problem.system.mu[i] == 0.0) continue;
    if (!classify(problem.kernels[i]).satisfies_J1)
      throw ValidationError(
          "find_c0: kernel " + std::string(to_string(problem.kernels[i].family())) +
          " violates (J1); no finite spreading speed exists, simulate the accelerated regime "
          "instead");
  }
}

double local_window_max(const SemiWaveProfile& p) {
  double mx = 0.0;
  for (Eigen::Index j = 0; j < p.nodes(); ++j)
    if (p.x(j) >= -0.1 * p.L) mx = std::max(mx, p.values(0, j));
  return mx;
}

// An inconclusive ladder is rerun deeper; nullopt if it stays inconclusive.
std::optional<SemiWaveResult> solve_with_retry(const SemiWaveProblem& problem, double c,
                                               const SemiWaveOptions& opt, int deep_rungs) {
  try {
    return solve_semiwave(problem, c, opt);
  } catch (const AmbiguousRegimeError&) {
    SemiWaveOptions deep = opt;
    deep.max_rungs = std::max(deep_rungs, opt.max_rungs);
    deep.tol = std::min(opt.tol, 1e-12);
    try {
      return solve_semiwave(problem, c, deep);
    } catch (const AmbiguousRegimeError&) {
      return std::nullopt;
    }
  }
}

}  // namespace

C0Result find_c0(const SemiWaveProblem& problem, double tol_c, const SemiWaveOptions& opt) {
  if (!(tol_c > 0)) throw ValidationError("find_c0: tol_c must be positive");
  require_J1(problem);
  C0Result r;
  SemiWaveResult last;
  auto P = [&](double c) {
    std::optional<SemiWaveResult> found = solve_with_retry(problem, c, opt, 40);
    SemiWaveResult res;
    if (found) res = std::move(*found);
    else res.regime = Regime::TravelingWave;
    SpeedEvaluation e;
    e.c = c;
    e.ambiguous = !found;
    e.regime = res.regime;
    if (res.profile) {
      e.flux = flux_functional(problem, *res.profile).value();
      e.local_max = local_window_max(*res.profile);
    }
    r.evaluations.push_back(e);
    last = std::move(res);
    return c - e.flux;
  };

  double lo = 0.01;
  if (P(lo) > 0)
    throw NumericalError("find_c0: c - M(c) is already positive at c = 0.01");
  double hi = 1.0;
  while (P(hi) <= 0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw NonConvergenceError("find_c0: no sign change below c = 1e6");
  }
  while (hi - lo >= tol_c) {
    const double mid = 0.5 * (lo + hi);
    (P(mid) > 0 ? hi : lo) = mid;
  }
  r.c_lo = lo;
  r.c_hi = hi;
  r.c0 = 0.5 * (lo + hi);
  P(r.c0);
  r.flux_at_c0 = r.evaluations.back().flux;
  r.at_c0 = std::move(last);
  return r;
}

CstarBracket bracket_Cstar(const SemiWaveProblem& problem, const std::vector<double>& c_grid,
                           const SemiWaveOptions& opt, int refine_steps, int deep_rungs) {
  if (c_grid.empty()) throw ValidationError("bracket_Cstar: empty speed grid");
  for (std::size_t k = 0; k < c_grid.size(); ++k)
    if (!(c_grid[k] > 0) || (k > 0 && !(c_grid[k] > c_grid[k - 1])))
      throw ValidationError("bracket_Cstar: speed grid must be positive and increasing");

  CstarBracket b;
  auto probe = [&](double c) {
    SpeedEvaluation e;
    e.c = c;
    std::optional<SemiWaveResult> res = solve_with_retry(problem, c, opt, deep_rungs);
    e.ambiguous = !res;
    e.regime = res ? res->regime : Regime::TravelingWave;
    if (res && res->profile) e.local_max = local_window_max(*res->profile);
    b.scan.push_back(e);
    return e.regime == Regime::SemiWave;
  };

  double lo = 0.0;
  std::optional<double> hi;
  for (double c : c_grid) {
    if (!probe(c)) {
      hi = c;
      break;
    }
    lo = c;
  }
  if (!hi) {
    bool j2 = true;
    for (int i = 0; i < problem.system.m0; ++i)
      if (!classify(problem.kernels[i]).satisfies_J2) j2 = false;
    b.unbounded = !j2;
    b.lo = lo;
    b.hi = std::numeric_limits<double>::infinity();
    return b;
  }
  for (int s = 0; s < refine_steps; ++s) {
    const double mid = 0.5 * (lo + *hi);
    (probe(mid) ? lo : *hi) = mid;
  }
  b.lo = lo;
  b.hi = *hi;
  return b;
}

TailReport tail_report(const SemiWaveProfile& profile, double u1_star) {
  TailReport t;
  t.window_lo = -0.8 * profile.L;
  t.window_hi = -0.2 * profile.L;
  std::vector<double> xs, gaps;
  double max_gap = 0.0;
  for (Eigen::Index j = 0; j < profile.nodes(); ++j) {
    const double x = profile.x(j);
    if (x < t.window_lo || x > t.window_hi) continue;
    const double gap = u1_star - profile.values(0, j);
    max_gap = std::max(max_gap, gap);
    if (gap > 1e-11) {
      xs.push_back(x);
      gaps.push_back(gap);
    }
  }
  t.points = static_cast<int>(xs.size());
  if (max_gap < 1e-12 || xs.size() < 5) return t;

  const Eigen::Map<const VectorXd> x(xs.data(), xs.size());
  const VectorXd lg = Eigen::Map<const VectorXd>(gaps.data(), gaps.size()).array().log();
  const VectorXd lx = x.array().abs().log();
  const LineFit ex = fit_line(x, lg);
  const LineFit al = fit_line(lx, lg);
  t.r2_exponential = ex.r2;
  t.r2_algebraic = al.r2;
  if (ex.r2 >= al.r2) {
    t.kind = TailKind::Exponential;
    t.rate = ex.slope;
  } else {
    t.kind = TailKind::Algebraic;
    t.rate = -al.slope;
  }
  return t;
}

}  // namespace nlfb
