#include "nlfb/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "nlfb/errors.hpp"

namespace nlfb {

namespace {

constexpr double kRootTol = 1e-10;

std::string format_vector(const VectorXd& v) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

VectorXd uniform_in_box(std::mt19937_64& rng, const VectorXd& lo, const VectorXd& hi) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  VectorXd x(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) x[i] = lo[i] + (hi[i] - lo[i]) * U(rng);
  return x;
}

VectorXd diffusing_ones(int m, int m0) {
  VectorXd v = VectorXd::Zero(m);
  v.head(m0).setOnes();
  return v;
}

}  // namespace

ReactionSystem fisher_kpp(double a, double b, double p) {
  if (!(a > 0 && b > 0 && p > 1)) throw ValidationError("fisher-kpp needs a, b > 0 and p > 1");
  ReactionSystem s;
  s.name = "fisher-kpp";
  s.m = s.m0 = 1;
  s.F = [=](const VectorXd& u) {
    VectorXd f(1);
    f[0] = a * u[0] - b * std::pow(u[0], p);
    return f;
  };
  s.analytic_jacobian = [=](const VectorXd& u) {
    MatrixXd J(1, 1);
    J(0, 0) = a - b * p * std::pow(u[0], p - 1.0);
    return J;
  };
  s.block_F = [=](const MatrixXd& U) -> MatrixXd {
    if (p == 2.0) return (a * U.array() - b * U.array().square()).matrix();
    return (a * U.array() - b * U.array().pow(p)).matrix();
  };
  s.D = VectorXd::Ones(1);
  s.mu = VectorXd::Ones(1);
  s.closed_form_equilibrium = VectorXd::Constant(1, std::pow(a / b, 1.0 / (p - 1.0)));
  s.params = {{"a", a}, {"b", b}, {"p", p}};
  return s;
}

ReactionSystem west_nile(double a1, double a2, double b1, double b2, double e1, double e2) {
  for (double v : {a1, a2, b1, b2, e1, e2})
    if (!(v > 0)) throw ValidationError("west-nile parameters must be positive");
  ReactionSystem s;
  s.name = "west-nile";
  s.m = s.m0 = 2;
  s.F = [=](const VectorXd& u) {
    VectorXd f(2);
    f[0] = a1 * (e1 - u[0]) * u[1] - b1 * u[0];
    f[1] = a2 * (e2 - u[1]) * u[0] - b2 * u[1];
    return f;
  };
  s.analytic_jacobian = [=](const VectorXd& u) {
    MatrixXd J(2, 2);
    J << -a1 * u[1] - b1, a1 * (e1 - u[0]), a2 * (e2 - u[1]), -a2 * u[0] - b2;
    return J;
  };
  s.block_F = [=](const MatrixXd& U) -> MatrixXd {
    MatrixXd out(2, U.cols());
    const auto h = U.row(0).array();
    const auto v = U.row(1).array();
    out.row(0) = a1 * (e1 - h) * v - b1 * h;
    out.row(1) = a2 * (e2 - v) * h - b2 * v;
    return out;
  };
  s.u_hat = VectorXd(2);
  *s.u_hat << e1, e2;
  s.D = VectorXd::Ones(2);
  // The front is driven by the vector population.
  s.mu = VectorXd(2);
  s.mu << 0.0, 1.0;
  const double printed_num = a1 * a2 - e1 * e2 - b1 * b2;
  s.printed_equilibrium = VectorXd(2);
  *s.printed_equilibrium << printed_num / (a1 * a2 * e2 + a2 * b1),
      printed_num / (a1 * a2 * e1 + a1 * b2);
  s.params = {{"a1", a1}, {"a2", a2}, {"b1", b1}, {"b2", b2}, {"e1", e1}, {"e2", e2}};
  return s;
}

ReactionSystem epidemic(double a, double b, double c, double g0, double k) {
  for (double v : {a, b, c, g0, k})
    if (!(v > 0)) throw ValidationError("epidemic parameters must be positive");
  ReactionSystem s;
  s.name = "epidemic";
  s.m = 2;
  s.m0 = 1;
  auto G = [=](double z) { return g0 * z / (1.0 + k * z); };
  auto dG = [=](double z) { return g0 / ((1.0 + k * z) * (1.0 + k * z)); };
  s.F = [=](const VectorXd& u) {
    VectorXd f(2);
    f[0] = -a * u[0] + c * u[1];
    f[1] = G(u[0]) - b * u[1];
    return f;
  };
  s.analytic_jacobian = [=](const VectorXd& u) {
    MatrixXd J(2, 2);
    J << -a, c, dG(u[0]), -b;
    return J;
  };
  s.block_F = [=](const MatrixXd& U) -> MatrixXd {
    MatrixXd out(2, U.cols());
    const auto u = U.row(0).array();
    const auto v = U.row(1).array();
    out.row(0) = -a * u + c * v;
    out.row(1) = g0 * u / (1.0 + k * u) - b * v;
    return out;
  };
  s.D = VectorXd::Zero(2);
  s.D[0] = 1.0;
  s.mu = VectorXd::Zero(2);
  s.mu[0] = 1.0;
  // G(K1)/K1 = ab/c, K2 = G(K1)/b
  const double K1 = (g0 * c / (a * b) - 1.0) / k;
  if (K1 > 0) {
    VectorXd K(2);
    K << K1, G(K1) / b;
    s.closed_form_equilibrium = K;
  }
  s.params = {{"a", a}, {"b", b}, {"c", c}, {"g0", g0}, {"k", k}};
  return s;
}

ReactionSystem custom_system(std::string name, int m, int m0, ReactionSystem::Field F) {
  if (m < 1 || m0 < 1 || m0 > m) throw ValidationError("custom system needs 1 <= m0 <= m");
  ReactionSystem s;
  s.name = std::move(name);
  s.m = m;
  s.m0 = m0;
  s.F = std::move(F);
  s.D = diffusing_ones(m, m0);
  s.mu = VectorXd::Zero(m);
  s.mu[0] = 1.0;
  return s;
}

VectorXd evaluate_F(const ReactionSystem& sys, const VectorXd& u) {
  if (u.size() != sys.m) throw std::invalid_argument("evaluate_F: dimension mismatch");
  if ((u.array() < 0.0).any())
    throw std::domain_error("evaluate_F: negative state " + format_vector(u));
  return sys.F(u);
}

MatrixXd evaluate_F_block(const ReactionSystem& sys, const MatrixXd& U) {
  if (sys.block_F) return sys.block_F(U);
  MatrixXd out(U.rows(), U.cols());
  for (Eigen::Index j = 0; j < U.cols(); ++j) out.col(j) = sys.F(U.col(j));
  return out;
}

MatrixXd finite_difference_jacobian(const ReactionSystem& sys, const VectorXd& u, double step) {
  MatrixXd J(sys.m, sys.m);
  for (int j = 0; j < sys.m; ++j) {
    VectorXd up = u, dn = u;
    up[j] += step;
    if (u[j] - step >= 0.0) {
      dn[j] -= step;
      J.col(j) = (sys.F(up) - sys.F(dn)) / (2.0 * step);
    } else {
      // one-sided second order at the boundary of the positive cone
      VectorXd up2 = u;
      up2[j] += 2.0 * step;
      J.col(j) = (-3.0 * sys.F(u) + 4.0 * sys.F(up) - sys.F(up2)) / (2.0 * step);
    }
  }
  return J;
}

MatrixXd jacobian(const ReactionSystem& sys, const VectorXd& u) {
  if ((u.array() < 0.0).any())
    throw std::domain_error("jacobian: negative state " + format_vector(u));
  if (sys.analytic_jacobian) return sys.analytic_jacobian(u);
  return finite_difference_jacobian(sys, u);
}

bool is_irreducible(const MatrixXd& A) {
  const Eigen::Index m = A.rows();
  if (m == 1) return A(0, 0) != 0.0;
  // transitive closure of the off-diagonal sparsity graph
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> reach(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) reach(i, j) = (i == j) || A(i, j) != 0.0;
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index i = 0; i < m; ++i)
      if (reach(i, k))
        for (Eigen::Index j = 0; j < m; ++j) reach(i, j) = reach(i, j) || reach(k, j);
  return reach.all();
}

namespace {

// Perron vector of a primitive nonnegative matrix B by power iteration,
// stopped on the Collatz-Wielandt bracket.
std::pair<double, VectorXd> perron(const MatrixXd& B, int max_iterations) {
  VectorXd v = VectorXd::Ones(B.rows());
  for (int it = 0; it < max_iterations; ++it) {
    const VectorXd w = B * v;
    const Eigen::ArrayXd ratio = w.array() / v.array();
    const double lo = ratio.minCoeff(), hi = ratio.maxCoeff();
    v = w / w.maxCoeff();
    if (hi - lo <= 1e-14 * std::max(1.0, std::abs(hi))) return {0.5 * (lo + hi), v};
  }
  throw NonConvergenceError("principal_eigenpair: power iteration did not converge");
}

}  // namespace

EigenPair principal_eigenpair(const MatrixXd& A, int max_iterations) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw std::invalid_argument("principal_eigenpair: matrix must be square");
  const Eigen::Index m = A.rows();
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (i != j && A(i, j) < 0.0)
        throw std::invalid_argument("principal_eigenpair: negative off-diagonal entry");
  if (!is_irreducible(A)) throw ReducibleMatrixError("principal_eigenpair: matrix is reducible");
  if (m == 1) return {A(0, 0), VectorXd::Ones(1), VectorXd::Ones(1)};

  const double sigma = A.diagonal().cwiseAbs().maxCoeff() + 1.0;
  const MatrixXd B = A + sigma * MatrixXd::Identity(m, m);
  auto [rho, theta] = perron(B, max_iterations);
  auto [rho_left, theta_tilde] = perron(B.transpose(), max_iterations);
  (void)rho_left;
  return {rho - sigma, theta, theta_tilde};
}

std::optional<VectorXd> newton_root(const ReactionSystem& sys, VectorXd x, int max_iterations) {
  VectorXd f = sys.F(x);
  double norm = f.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iterations && norm > 1e-13; ++it) {
    const MatrixXd J = jacobian(sys, x);
    const VectorXd step = J.fullPivLu().solve(f);
    if (!step.allFinite()) return std::nullopt;
    double lambda = 1.0;
    bool accepted = false;
    for (int back = 0; back < 40; ++back, lambda *= 0.5) {
      const VectorXd trial = (x - lambda * step).cwiseMax(0.0);
      const VectorXd ft = sys.F(trial);
      const double nt = ft.lpNorm<Eigen::Infinity>();
      if (std::isfinite(nt) && nt < norm) {
        x = trial;
        f = ft;
        norm = nt;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (norm < kRootTol * 1e-2) return x;
  return std::nullopt;
}

VectorXd find_equilibrium(const ReactionSystem& sys) {
  if (sys.closed_form_equilibrium) {
    const VectorXd& u = *sys.closed_form_equilibrium;
    if (sys.F(u).lpNorm<Eigen::Infinity>() < kRootTol && (u.array() > 0).all()) return u;
  }
  std::vector<VectorXd> starts;
  const double eps = 1e-3;
  if (sys.u_hat)
    starts.push_back(0.5 * (VectorXd::Constant(sys.m, eps) + *sys.u_hat));
  for (double scale : {1.0, 0.25, 4.0, 16.0}) starts.push_back(VectorXd::Constant(sys.m, scale));

  bool hit_zero = false;
  for (const auto& s : starts) {
    const auto root = newton_root(sys, s);
    if (!root) continue;
    if ((root->array() > 1e-8).all()) return *root;
    if (root->lpNorm<Eigen::Infinity>() < 1e-8) hit_zero = true;
  }
  if (hit_zero)
    throw NonConvergenceError(sys.name + ": Newton converged to 0 (monostability failure)");
  throw NonConvergenceError(sys.name + ": no positive equilibrium found");
}

VectorXd sampling_box(const ReactionSystem& sys, const VectorXd& u_star) {
  VectorXd top = u_star + VectorXd::Ones(sys.m);
  if (sys.u_hat) top = top.cwiseMin(*sys.u_hat);
  return top;
}

double lipschitz_bound(const ReactionSystem& sys, const VectorXd& K, int samples,
                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const VectorXd zero = VectorXd::Zero(sys.m);
  auto norm1 = [&](const VectorXd& u) {
    return jacobian(sys, u).cwiseAbs().colwise().sum().maxCoeff();
  };
  double L = std::max(norm1(zero), norm1(K));
  for (int s = 0; s < samples; ++s) L = std::max(L, norm1(uniform_in_box(rng, zero, K)));
  return L;
}

AssumptionReport verify_assumptions(const ReactionSystem& sys, int sample_count,
                                    std::uint64_t seed) {
  if (sample_count < 100) throw ValidationError("verify_assumptions: sample_count must be >= 100");
  AssumptionReport r;
  std::mt19937_64 rng(seed);
  const int m = sys.m;
  const VectorXd zero = VectorXd::Zero(m);

  // (f1)(iii) first: everything downstream needs lambda1 > 0.
  const MatrixXd A0 = jacobian(sys, zero);
  bool off_diag_ok = true;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i != j && A0(i, j) < 0) off_diag_ok = false;
  if (!off_diag_ok) {
    r.f1_irreducible = {false, "gradF(0) has a negative off-diagonal entry", zero};
  } else if (!is_irreducible(A0)) {
    r.f1_irreducible = {false, "gradF(0) is reducible", zero};
  } else {
    const EigenPair ep = principal_eigenpair(A0);
    r.lambda1 = ep.lambda1;
    std::ostringstream os;
    os << "lambda1 = " << ep.lambda1;
    r.f1_irreducible = {ep.lambda1 > 0, os.str(), std::nullopt};
    if (ep.lambda1 <= 0) r.f1_irreducible.counterexample = zero;
  }

  // (f1)(i): roots 0 and u*, nothing else in the box.
  VectorXd u_star;
  try {
    u_star = find_equilibrium(sys);
    r.equilibrium = u_star;
  } catch (const NumericalError& e) {
    r.f1_roots = {false, e.what(), std::nullopt};
  }
  if (r.equilibrium) {
    r.f1_roots.passed = sys.F(zero).lpNorm<Eigen::Infinity>() < kRootTol &&
                        sys.F(u_star).lpNorm<Eigen::Infinity>() < kRootTol;
    r.f1_roots.detail = "u* = " + format_vector(u_star);
    if (sys.printed_equilibrium) {
      const double gap = (*sys.printed_equilibrium - u_star).lpNorm<Eigen::Infinity>();
      if (gap > 1e-8)
        r.notes.push_back("printed equilibrium " + format_vector(*sys.printed_equilibrium) +
                          " disagrees with the computed root " + format_vector(u_star));
    }
  }
  const VectorXd box = r.equilibrium ? sampling_box(sys, u_star)
                                     : (sys.u_hat ? *sys.u_hat : VectorXd::Constant(m, 2.0));
  if (r.equilibrium && r.f1_roots.passed) {
    const int starts = std::max(10, sample_count / 10);
    const double scale = std::max(1.0, u_star.lpNorm<Eigen::Infinity>());
    for (int s = 0; s < starts; ++s) {
      const auto root = newton_root(sys, uniform_in_box(rng, zero, box));
      if (!root || (root->array() < -1e-9).any()) continue;
      const bool is_zero = root->lpNorm<Eigen::Infinity>() < 1e-7 * scale;
      const bool is_star = (*root - u_star).lpNorm<Eigen::Infinity>() < 1e-7 * scale;
      if (!is_zero && !is_star) {
        r.f1_roots = {false, "extra root " + format_vector(*root), *root};
        break;
      }
    }
  }

  // (f1)(ii) cooperativity on the sampling box; (f2) subhomogeneity.
  r.f1_cooperative = {true, "off-diagonal Jacobian entries >= 0 on samples", std::nullopt};
  r.f2_subhomogeneous = {true, "F(ku) >= kF(u) on samples", std::nullopt};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < sample_count; ++s) {
    const VectorXd u = uniform_in_box(rng, zero, box);
    const MatrixXd J = jacobian(sys, u);
    for (int i = 0; i < m && r.f1_cooperative.passed; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j && J(i, j) < -1e-12) {
          r.f1_cooperative = {false, "negative off-diagonal entry", u};
          break;
        }
    const double k = unit(rng);
    const VectorXd gap = sys.F(k * u) - k * sys.F(u);
    if (r.f2_subhomogeneous.passed && gap.minCoeff() < -1e-12) {
      r.f2_subhomogeneous = {false, "F(ku) < kF(u) at k = " + std::to_string(k), u};
    }
  }

  // (f1)(iv) coupling of non-diffusing species.
  r.f1_coupling = {true, sys.m0 == m ? "vacuous (m0 = m)" : "d_j f_i > 0 on samples", std::nullopt};
  if (sys.m0 < m && r.equilibrium) {
    for (int s = 0; s < sample_count && r.f1_coupling.passed; ++s) {
      const VectorXd u = uniform_in_box(rng, zero, u_star);
      const MatrixXd J = jacobian(sys, u);
      for (int i = sys.m0; i < m; ++i)
        for (int j = 0; j < sys.m0; ++j)
          if (!(J(i, j) > 0)) r.f1_coupling = {false, "d_j f_i <= 0 for j <= m0 < i", u};
    }
  }

  // (f3) at u*.
  if (r.equilibrium) {
    const MatrixXd As = jacobian(sys, u_star);
    const double scale = std::max(1.0, As.cwiseAbs().maxCoeff());
    const double det = As.determinant();
    const VectorXd row_product = (u_star.transpose() * As).transpose();
    const VectorXd row_sums = As * u_star;
    bool ok = std::abs(det) > 1e-12 * std::pow(scale, m);
    std::string why = ok ? "" : "gradF(u*) singular; ";
    if ((row_product.array() > 1e-12).any()) {
      ok = false;
      why += "u* . gradF(u*) has a positive entry; ";
    }
    for (int i = 0; i < m; ++i) {
      if (row_sums[i] < -1e-12) continue;
      if (row_sums[i] > 1e-12) {
        ok = false;
        why += "row " + std::to_string(i + 1) + " sum positive; ";
        continue;
      }
      // zero row sum: f_i must be affine on [u* - eps0, u*]
      const double eps0 = 1e-2 * u_star.minCoeff();
      for (int s = 0; s < 20; ++s) {
        const VectorXd v = uniform_in_box(rng, u_star.array() - eps0, u_star);
        const double lin = sys.F(u_star)[i] + As.row(i).dot(v - u_star);
        if (std::abs(sys.F(v)[i] - lin) > 1e-9) {
          ok = false;
          why += "row " + std::to_string(i + 1) + " sum zero but f_i not affine near u*; ";
          break;
        }
      }
    }
    r.f3_stability = {ok, ok ? "gradF(u*) invertible, sign conditions hold" : why,
                      ok ? std::nullopt : std::optional<VectorXd>(u_star)};

    // F(v) - gradF(v) v >> 0 on (0, u*]
    r.strengthened_f2 = {true, "F(v) - gradF(v) v >> 0 on samples", std::nullopt};
    for (int s = 0; s <= sample_count; ++s) {
      const VectorXd v = s == 0 ? u_star : uniform_in_box(rng, 1e-3 * u_star, u_star);
      const VectorXd g = sys.F(v) - jacobian(sys, v) * v;
      if (!(g.array() > 1e-14).all()) {
        r.strengthened_f2 = {false, "F(v) - gradF(v) v not >> 0", v};
        break;
      }
    }

    r.lipschitz = lipschitz_bound(sys, box, sample_count, seed);

    // (f4) empirically: ODE convergence from several nonzero starts.
    std::vector<VectorXd> starts{0.01 * u_star, 0.5 * u_star, box};
    for (int s = 0; s < 3; ++s) starts.push_back(uniform_in_box(rng, 0.05 * box, box));
    r.f4_empirical = true;
    for (const auto& w0 : starts) {
      try {
        const auto traj = solve_ode(sys, w0, 400.0, 0.05);
        if ((traj.w.back() - u_star).lpNorm<Eigen::Infinity>() > 1e-4) r.f4_empirical = false;
      } catch (const NumericalError&) {
        r.f4_empirical = false;
      }
    }
  } else {
    r.f3_stability = {false, "no equilibrium", std::nullopt};
    r.strengthened_f2 = {false, "no equilibrium", std::nullopt};
  }
  return r;
}

OdeTrajectory solve_ode(const ReactionSystem& sys, const VectorXd& w0, double T, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("solve_ode: dt must be positive");
  if ((w0.array() < 0).any()) throw std::domain_error("solve_ode: negative initial data");
  double cap = 1e6 * std::max(1.0, w0.lpNorm<Eigen::Infinity>());
  if (sys.u_hat) {
    cap = 10.0 * sys.u_hat->maxCoeff();
  }
  if (sys.closed_form_equilibrium)
    cap = std::max(sys.u_hat ? cap : 0.0, 10.0 * sys.closed_form_equilibrium->maxCoeff());
  cap = std::max(cap, 10.0 * w0.lpNorm<Eigen::Infinity>());

  OdeTrajectory out;
  out.t.push_back(0.0);
  out.w.push_back(w0);
  VectorXd w = w0;
  double t = 0.0;
  const long steps = std::max(0L, static_cast<long>(std::ceil(T / dt - 1e-12)));
  for (long n = 0; n < steps; ++n) {
    const double h = std::min(dt, T - t);
    const VectorXd k1 = sys.F(w);
    const VectorXd k2 = sys.F(w + 0.5 * h * k1);
    const VectorXd k3 = sys.F(w + 0.5 * h * k2);
    const VectorXd k4 = sys.F(w + h * k3);
    w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = (n + 1 == steps) ? T : t + h;
    if (!w.allFinite() || w.maxCoeff() > cap)
      throw BlowUpError("solve_ode: blow-up at t = " + std::to_string(t));
    out.t.push_back(t);
    out.w.push_back(w);
  }
  return out;
}

}  // namespace nlfb
