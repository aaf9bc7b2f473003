#include "nlfb/fbsolver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "nlfb/errors.hpp"

namespace nlfb {

namespace {

std::vector<Kernel> broadcast_kernels(const ReactionSystem& sys, std::vector<Kernel> kernels) {
  if (kernels.empty()) throw ValidationError("fbsolver: at least one kernel is required");
  if (kernels.size() == 1 && sys.m0 > 1) kernels.resize(sys.m0, kernels.front());
  if (static_cast<int>(kernels.size()) != sys.m0)
    throw ValidationError("fbsolver: need one kernel per diffusing species");
  if (sys.D.size() != sys.m || sys.mu.size() != sys.m)
    throw ValidationError("fbsolver: D and mu must have m entries");
  if ((sys.D.array() < 0).any() || (sys.mu.array() < 0).any())
    throw ValidationError("fbsolver: D and mu must be nonnegative");
  if (sys.m0 < sys.m && (sys.D.tail(sys.m - sys.m0).array() != 0.0 ||
                         sys.mu.tail(sys.m - sys.m0).array() != 0.0).any())
    throw ValidationError("fbsolver: d_i and mu_i must vanish for non-diffusing species");
  if (!(sys.mu.sum() > 0)) throw ValidationError("fbsolver: sum of mu must be positive");
  return kernels;
}

// Lattice units: h - x_k = (kh - k + fh) dx.
double dist_right(const FrontierState& s, Eigen::Index k) {
  return (static_cast<double>(s.kh - k) + s.fh) * s.dx;
}
double dist_left(const FrontierState& s, Eigen::Index k) {
  return (static_cast<double>(k - s.kg) - s.fg) * s.dx;
}

// Splits a front position in lattice units into integer + fraction in [0, 1).
void normalize(Eigen::Index& k, double& f) {
  const double fl = std::floor(f);
  k += static_cast<Eigen::Index>(fl);
  f -= fl;
  if (f >= 1.0) {
    k += 1;
    f = 0.0;
  }
}

}  // namespace

FbModel::FbModel(ReactionSystem system, std::vector<Kernel> kernels, double dx,
                 Eigen::Index fft_threshold)
    : system_(std::move(system)), dx_(dx) {
  if (!(dx > 0)) throw ValidationError("fbsolver: dx must be positive");
  kernels_ = broadcast_kernels(system_, std::move(kernels));
  conv_.resize(system_.m);
  cells_.resize(system_.m);
  for (int i = 0; i < system_.m0; ++i) {
    if (system_.D[i] == 0.0) continue;
    for (int k = 0; k < i; ++k)
      if (conv_[k] && conv_[k]->kernel() == kernels_[i]) conv_[i] = conv_[k];
    if (!conv_[i]) conv_[i] = std::make_shared<LatticeConvolution>(kernels_[i], dx, fft_threshold);
  }
  u_star_ = find_equilibrium(system_);
  lipschitz_ = lipschitz_bound(system_, sampling_box(system_, u_star_));
}

std::pair<double, double> FbModel::cell_weights(int i, Eigen::Index k) const {
  auto& c = cells_[i];
  if (static_cast<Eigen::Index>(c.size()) <= k) {
    const auto have = static_cast<Eigen::Index>(c.size());
    const Eigen::Index want = std::max(k + 1, 2 * have);
    c.reserve(want);
    for (Eigen::Index j = have; j < want; ++j)
      c.push_back(segment_weights(kernels_[i], static_cast<double>(j) * dx_,
                                  static_cast<double>(j + 1) * dx_));
  }
  return c[k];
}

std::string_view to_string(InitialShape s) {
  switch (s) {
    case InitialShape::Cosine2: return "cosine2";
    case InitialShape::Bump: return "bump";
    case InitialShape::Constant: return "constant";
  }
  return "?";
}

std::optional<InitialShape> parse_initial_shape(std::string_view name) {
  if (name == "cosine2") return InitialShape::Cosine2;
  if (name == "bump") return InitialShape::Bump;
  if (name == "constant") return InitialShape::Constant;
  return std::nullopt;
}

FrontierState initial_state(const FbModel& model, double h0, InitialShape shape,
                            const VectorXd& amplitude, double dx) {
  if (!(h0 > 0)) throw ValidationError("fbsolver: h0 must be positive");
  if (dx != model.dx()) throw ValidationError("fbsolver: dx differs from the model's lattice");
  const int m = model.system().m;
  VectorXd amp = amplitude.size() == 1 ? VectorXd::Constant(m, amplitude[0]) : amplitude;
  if (amp.size() != m) throw ValidationError("fbsolver: u0 amplitude needs 1 or m entries");
  if ((amp.array() < 0).any()) throw ValidationError("fbsolver: u0 amplitude must be nonnegative");

  FrontierState s;
  s.dx = dx;
  s.kh = 0;
  s.fh = h0 / dx;
  normalize(s.kh, s.fh);
  s.kg = 0;
  s.fg = -h0 / dx;
  normalize(s.kg, s.fg);
  const Eigen::Index n = s.active();
  s.values = MatrixXd::Zero(m, std::max<Eigen::Index>(n, 0));
  for (Eigen::Index j = 0; j < n; ++j) {
    const double x = s.x(j);
    double p = 1.0;
    switch (shape) {
      case InitialShape::Cosine2: {
        const double c = std::cos(std::numbers::pi * x / (2.0 * h0));
        p = c * c;
        break;
      }
      case InitialShape::Bump: p = 1.0 - (x / h0) * (x / h0); break;
      case InitialShape::Constant: break;
    }
    s.values.col(j) = amp.cwiseProduct(model.u_star()) * std::max(p, 0.0);
  }
  return s;
}

FrontSpeeds boundary_speeds(const FbModel& model, const FrontierState& s) {
  const auto& sys = model.system();
  const Eigen::Index n = s.active();
  FrontSpeeds out;
  if (n <= 0) return out;
  const Eigen::Index k0 = s.first_node(), k1 = s.last_node();
  for (int i = 0; i < sys.m0; ++i) {
    if (sys.mu[i] == 0.0) continue;
    const Kernel& K = model.kernels()[i];
    const auto u = s.values.row(i);
    // cells [g, x_k0], [x_k, x_k+1], [x_k1, h]; u = 0 at the fronts
    double hd = 0.0, gd = 0.0;
    {
      const auto w = tail_segment_weights(K, dist_right(s, k0), dist_right(s, k0) + dist_left(s, k0));
      hd += w.first * u[0];
      const auto v = tail_segment_weights(K, 0.0, dist_left(s, k0));
      gd += v.second * u[0];
    }
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
      const Eigen::Index k = k0 + j;
      const auto w = tail_segment_weights(K, dist_right(s, k + 1), dist_right(s, k));
      hd += w.first * u[j + 1] + w.second * u[j];
      const auto v = tail_segment_weights(K, dist_left(s, k), dist_left(s, k + 1));
      gd += v.first * u[j] + v.second * u[j + 1];
    }
    {
      const auto w = tail_segment_weights(K, 0.0, dist_right(s, k1));
      hd += w.second * u[n - 1];
      const auto v = tail_segment_weights(K, dist_left(s, k1), dist_left(s, k1) + dist_right(s, k1));
      gd += v.first * u[n - 1];
    }
    out.h_dot += sys.mu[i] * hd;
    out.g_dot -= sys.mu[i] * gd;
  }
  out.h_dot = std::max(out.h_dot, 0.0);
  out.g_dot = std::min(out.g_dot, 0.0);
  return out;
}

MatrixXd rhs(const FbModel& model, const FrontierState& s, const MatrixXd& U,
             LatticeConvolution::Path path) {
  const auto& sys = model.system();
  const Eigen::Index n = U.cols();
  MatrixXd out = evaluate_F_block(sys, U);
  if (n == 0) return out;
  const double dx = s.dx;
  const double left_len = dist_left(s, s.first_node());
  const double right_len = dist_right(s, s.last_node());
  for (int i = 0; i < sys.m0; ++i) {
    if (sys.D[i] == 0.0) continue;
    const LatticeConvolution* C = model.convolution(i);
    const Kernel& K = model.kernels()[i];
    VectorXd conv = C->apply(U.row(i).transpose(), path);
    // the hat convolution drops the end nodes to 0 one full cell out; the
    // interpolant reaches 0 at the fronts instead
    const double uL = U(i, 0), uR = U(i, n - 1);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double sl = static_cast<double>(j) * dx;
      const double sr = static_cast<double>(n - 1 - j) * dx;
      if (left_len != dx)
        conv[j] += uL * (segment_weights(K, sl, sl + left_len).first - model.cell_weights(i, j).first);
      if (right_len != dx)
        conv[j] += uR * (segment_weights(K, sr, sr + right_len).first -
                         model.cell_weights(i, n - 1 - j).first);
    }
    out.row(i) += sys.D[i] * (conv.transpose() - U.row(i));
  }
  return out;
}

StepStats step(const FbModel& model, FrontierState& s, double dt, double tol) {
  const auto& sys = model.system();
  StepStats st;
  st.speeds = boundary_speeds(model, s);

  auto clamp = [&](MatrixXd& V) {
    V = V.cwiseMax(0.0);
    if (sys.u_hat)
      for (int i = 0; i < sys.m; ++i) V.row(i) = V.row(i).cwiseMin((*sys.u_hat)[i]);
  };

  const MatrixXd k1 = rhs(model, s, s.values);
  MatrixXd pred = s.values + dt * k1;
  clamp(pred);
  const MatrixXd k2 = rhs(model, s, pred);
  MatrixXd next = s.values + 0.5 * dt * (k1 + k2);

  if (next.size() > 0) {
    st.min_before_clamp = next.minCoeff();
    if (sys.u_hat) {
      st.max_excess_before_clamp = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < sys.m; ++i)
        st.max_excess_before_clamp =
            std::max(st.max_excess_before_clamp, next.row(i).maxCoeff() - (*sys.u_hat)[i]);
    }
  }
  if (st.min_before_clamp < -tol || st.max_excess_before_clamp > tol) {
    std::ostringstream msg;
    msg << "fbsolver.step: stability violation at t = " << s.t << " (min " << st.min_before_clamp
        << ", excess over u_hat " << st.max_excess_before_clamp << "); reduce cfl_factor";
    throw StabilityError(msg.str());
  }
  clamp(next);

  const Eigen::Index old_first = s.first_node();
  s.fh += dt * st.speeds.h_dot / s.dx;
  normalize(s.kh, s.fh);
  s.fg += dt * st.speeds.g_dot / s.dx;
  normalize(s.kg, s.fg);
  MatrixXd grown = MatrixXd::Zero(sys.m, std::max<Eigen::Index>(s.active(), 0));
  if (next.cols() > 0) grown.middleCols(old_first - s.first_node(), next.cols()) = next;
  s.values = std::move(grown);
  s.t += dt;
  return st;
}

double stable_dt(const FbModel& model, const SimulationConfig& cfg) {
  if (!(cfg.cfl_factor > 0 && cfg.sample_dt > 0))
    throw ValidationError("fbsolver: cfl_factor and sample_dt must be positive");
  const double dt0 = cfg.cfl_factor / (model.system().D.maxCoeff() + model.lipschitz());
  const double per = std::ceil(cfg.sample_dt / dt0 - 1e-9);
  return cfg.sample_dt / std::max(per, 1.0);
}

namespace {

VectorXd center_values(const FrontierState& s, int m) {
  const Eigen::Index c = s.column(0);
  return c < 0 ? VectorXd::Zero(m) : VectorXd(s.values.col(c));
}

VectorXd rk4(const ReactionSystem& sys, const VectorXd& w, double dt) {
  const VectorXd a = sys.F(w);
  const VectorXd b = sys.F(w + 0.5 * dt * a);
  const VectorXd c = sys.F(w + 0.5 * dt * b);
  const VectorXd d = sys.F(w + dt * c);
  return w + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d);
}

}  // namespace

Trajectory run(const FbModel& model, const SimulationConfig& cfg) {
  const auto& sys = model.system();
  if (!(cfg.T_final >= 0)) throw ValidationError("fbsolver: T_final must be nonnegative");
  const double dt = stable_dt(model, cfg);
  const auto per_sample = static_cast<long long>(std::llround(cfg.sample_dt / dt));
  const auto samples = static_cast<long long>(std::llround(cfg.T_final / cfg.sample_dt));
  if (std::abs(static_cast<double>(samples) * cfg.sample_dt - cfg.T_final) > 1e-9 * (1.0 + cfg.T_final))
    throw ValidationError("fbsolver: T_final must be a multiple of sample_dt");
  const long long total = samples * per_sample;

  std::vector<long long> snap_steps;
  for (double ts : cfg.snapshot_times) {
    if (ts < 0 || ts > cfg.T_final + 1e-12)
      throw ValidationError("fbsolver: snapshot time outside [0, T_final]");
    snap_steps.push_back(std::llround(ts / dt));
  }

  Trajectory tr;
  tr.dx = cfg.dx;
  tr.dt = dt;
  FrontierState s = initial_state(model, cfg.h0, cfg.shape,
                                  cfg.amplitude.size() ? cfg.amplitude : VectorXd::Ones(1), cfg.dx);
  VectorXd W = s.values.size() ? VectorXd(s.values.rowwise().maxCoeff()) : VectorXd::Zero(sys.m);

  auto record = [&](long long n) {
    const FrontSpeeds sp = boundary_speeds(model, s);
    tr.t.push_back(static_cast<double>(n) * dt);
    tr.g.push_back(s.g());
    tr.h.push_back(s.h());
    tr.g_dot.push_back(sp.g_dot);
    tr.h_dot.push_back(sp.h_dot);
    tr.center.push_back(center_values(s, sys.m));
    tr.max_value.push_back(s.values.size() ? s.values.maxCoeff() : 0.0);
    double ex = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < sys.m; ++i)
      if (s.values.cols() > 0) ex = std::max(ex, s.values.row(i).maxCoeff() - W[i]);
    tr.sandwich_excess.push_back(ex);
  };
  auto snapshot = [&](long long n) {
    for (long long k : snap_steps)
      if (k == n) {
        Snapshot sn;
        sn.t = static_cast<double>(n) * dt;
        sn.x.resize(s.active() + 2);
        sn.values = MatrixXd::Zero(sys.m, s.active() + 2);
        sn.x[0] = s.g();
        for (Eigen::Index j = 0; j < s.active(); ++j) sn.x[j + 1] = s.x(j);
        sn.x[s.active() + 1] = s.h();
        if (s.active() > 0) sn.values.middleCols(1, s.active()) = s.values;
        tr.snapshots.push_back(std::move(sn));
      }
  };

  const auto start = std::chrono::steady_clock::now();
  record(0);
  snapshot(0);
  for (long long n = 1; n <= total; ++n) {
    const StepStats st = step(model, s, dt);
    s.t = static_cast<double>(n) * dt;
    W = rk4(sys, W, dt);
    tr.min_before_clamp = std::min(tr.min_before_clamp, st.min_before_clamp);
    if (n % per_sample == 0) {
      record(n);
      if (cfg.wall_clock_budget > 0) {
        const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
        if (el.count() > cfg.wall_clock_budget) {
          std::ostringstream msg;
          msg << "fbsolver.run: wall-clock budget of " << cfg.wall_clock_budget
              << " s exceeded at t = " << s.t;
          throw BudgetExceededError(msg.str());
        }
      }
    }
    snapshot(n);
  }
  tr.final_state = std::move(s);
  return tr;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Spreading: return "spreading";
    case Outcome::Vanishing: return "vanishing";
    case Outcome::Undecided: return "undecided";
  }
  return "?";
}

Outcome classify_outcome(const Trajectory& tr, const VectorXd& u_star, const OutcomeThresholds& th) {
  if (tr.t.empty()) throw ValidationError("classify_outcome: empty trajectory");
  const double T = tr.t.back();
  std::size_t q = 0;
  while (q + 1 < tr.t.size() && tr.t[q] < 0.75 * T) ++q;
  const std::size_t e = tr.t.size() - 1;
  const double growth = tr.h[e] - tr.h[q];
  const double width_change = (tr.h[e] - tr.g[e]) - (tr.h[q] - tr.g[q]);
  const bool center_ok =
      ((tr.center[e] - u_star).cwiseAbs().array() <= th.center_rel * u_star.array()).all();
  if (growth > th.growth_cells * tr.dx && center_ok) return Outcome::Spreading;
  if (tr.max_value[e] < th.vanish_tol && width_change < tr.dx) return Outcome::Vanishing;
  return Outcome::Undecided;
}

}  // namespace nlfb
