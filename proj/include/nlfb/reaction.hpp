#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nlfb {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Reaction term F: R_+^m -> R^m with its model data. Species 0..m0-1
/// diffuse; the rest only react.
struct ReactionSystem {
  using Field = std::function<VectorXd(const VectorXd&)>;
  using JacobianFn = std::function<MatrixXd(const VectorXd&)>;
  /// Columnwise F over an m x N block; optional fast path.
  using BlockField = std::function<MatrixXd(const MatrixXd&)>;

  std::string name;
  int m = 1;
  int m0 = 1;
  Field F;
  JacobianFn analytic_jacobian;  // empty -> central finite differences
  BlockField block_F;            // empty -> column loop over F
  std::optional<VectorXd> u_hat; // absent means +inf cap
  VectorXd D;                    // diffusion rates, zero beyond m0
  VectorXd mu;                   // front coefficients, zero beyond m0
  std::optional<VectorXd> closed_form_equilibrium;
  /// Equilibrium as printed in the model's source, checked, never trusted.
  std::optional<VectorXd> printed_equilibrium;
  std::map<std::string, double> params;
};

struct EigenPair {
  double lambda1 = 0.0;
  VectorXd theta;        // right eigenvector, max component 1
  VectorXd theta_tilde;  // left eigenvector, max component 1
};

struct AssumptionCheck {
  bool passed = false;
  std::string detail;
  std::optional<VectorXd> counterexample;
};

struct AssumptionReport {
  AssumptionCheck f1_roots;          // (f1)(i)
  AssumptionCheck f1_cooperative;    // (f1)(ii)
  AssumptionCheck f1_irreducible;    // (f1)(iii)
  AssumptionCheck f1_coupling;       // (f1)(iv)
  AssumptionCheck f2_subhomogeneous;
  AssumptionCheck f3_stability;
  AssumptionCheck strengthened_f2;   // F(v) - grad F(v) v >> 0 on (0, u*]
  bool f4_empirical = false;
  std::optional<VectorXd> equilibrium;
  std::optional<double> lambda1;
  std::optional<double> lipschitz;
  std::string f3_reading = "row-vector product u* . gradF(u*) <= 0, plus row sums gradF(u*) u*";
  std::vector<std::string> notes;

  bool f1_to_f3_passed() const {
    return f1_roots.passed && f1_cooperative.passed && f1_irreducible.passed &&
           f1_coupling.passed && f2_subhomogeneous.passed && f3_stability.passed;
  }
};

struct OdeTrajectory {
  std::vector<double> t;
  std::vector<VectorXd> w;
};

// ---------------------------------------------------------------------------
// Presets

/// f(u) = a u - b u^p (logistic for a = b = 1, p = 2).
ReactionSystem fisher_kpp(double a = 1.0, double b = 1.0, double p = 2.0);

/// Two-species host/vector model
///   f1 = a1 (e1 - u1) u2 - b1 u1,  f2 = a2 (e2 - u2) u1 - b2 u2.
ReactionSystem west_nile(double a1, double a2, double b1, double b2, double e1, double e2);

/// u diffuses, v does not:  f1 = -a u + c v,  f2 = G(u) - b v,
/// G(z) = g0 z / (1 + k z).
ReactionSystem epidemic(double a, double b, double c, double g0, double k);

/// Generic system from a callable; Jacobian by finite differences.
ReactionSystem custom_system(std::string name, int m, int m0, ReactionSystem::Field F);

// ---------------------------------------------------------------------------
// Operations

/// Throws std::domain_error if any component of u is negative.
VectorXd evaluate_F(const ReactionSystem& sys, const VectorXd& u);

/// Columnwise F on an m x N block (no domain check, hot path).
MatrixXd evaluate_F_block(const ReactionSystem& sys, const MatrixXd& U);

MatrixXd jacobian(const ReactionSystem& sys, const VectorXd& u);
MatrixXd finite_difference_jacobian(const ReactionSystem& sys, const VectorXd& u,
                                    double step = 1e-5);

bool is_irreducible(const MatrixXd& A);

/// Perron-Frobenius pair of a matrix with nonnegative off-diagonal entries,
/// by power iteration on A + sigma I with sigma = max|a_ii| + 1.
EigenPair principal_eigenpair(const MatrixXd& A, int max_iterations = 100000);

/// Positive equilibrium u*: closed form when the preset has one, otherwise
/// damped Newton.
VectorXd find_equilibrium(const ReactionSystem& sys);

/// Damped Newton from an arbitrary start; nullopt when it does not converge.
std::optional<VectorXd> newton_root(const ReactionSystem& sys, VectorXd start,
                                    int max_iterations = 200);

/// max 1-norm of sampled Jacobians over the box [0, K].
double lipschitz_bound(const ReactionSystem& sys, const VectorXd& K, int samples = 400,
                       std::uint64_t seed = 1);

/// Upper corner of the sampling box, u_hat ^ (u* + 1).
VectorXd sampling_box(const ReactionSystem& sys, const VectorXd& u_star);

AssumptionReport verify_assumptions(const ReactionSystem& sys, int sample_count,
                                    std::uint64_t seed);

/// Classical RK4 for W' = F(W) on [0, T]; last step shortened to land on T.
OdeTrajectory solve_ode(const ReactionSystem& sys, const VectorXd& w0, double T, double dt);

}  // namespace nlfb
