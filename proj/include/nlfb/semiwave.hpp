#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlfb/extended.hpp"
#include "nlfb/kernels.hpp"
#include "nlfb/reaction.hpp"

namespace nlfb {

/// Everything about (F, J) the semi-wave solvers need, computed once.
struct SemiWaveProblem {
  ReactionSystem system;
  std::vector<Kernel> kernels;  // one per diffusing species
  VectorXd u_star;
  VectorXd theta;               // right Perron vector of gradF(0), max component 1
  double lipschitz = 0.0;       // sampled bound on [0, u_hat ^ (u* + 1)]
};

/// Validates the kernels against the system (a single kernel is shared by all
/// diffusing species) and precomputes u*, Theta and the Lipschitz bound.
SemiWaveProblem make_semiwave_problem(const ReactionSystem& system, std::vector<Kernel> kernels);

/// Samples of Phi on x_j = -L + j dx, j = 0..N (x_N = 0); row i is species i.
struct SemiWaveProfile {
  double L = 0.0;
  double dx = 0.0;
  double c = 0.0;
  VectorXd delta;
  MatrixXd values;
  int iterations = 0;
  double residual = 0.0;        // sup |P[Phi] - Phi|
  bool converged_left = false;

  Eigen::Index nodes() const { return values.cols(); }
  double x(Eigen::Index j) const { return -L + static_cast<double>(j) * dx; }
};

enum class Regime { SemiWave, TravelingWave };
std::string_view to_string(Regime r);

struct SemiWaveResult {
  Regime regime = Regime::SemiWave;
  std::optional<SemiWaveProfile> profile;  // limit profile, semi-wave regime only
  std::vector<double> shift_history;
  double L_used = 0.0;
};

struct SemiWaveOptions {
  double L = 60.0;
  double dx = 0.05;
  double tol = 1e-10;
  double eps0 = 1e-2;
  int max_rungs = 12;
  double escape_fraction = 0.8;
  double tol_left_rel = 1e-3;
  int max_iterations = 200000;
};

/// Sigma-tilde shift, M = (max d + Lhat)/c + 1.
double picard_M(const SemiWaveProblem& problem, double c);

/// One application of the operator P for the profile's (c, delta).
SemiWaveProfile apply_P(const SemiWaveProblem& problem, const SemiWaveProfile& profile, double M);

/// Monotone Picard iteration from Gamma_0 = delta = eps Theta.
SemiWaveProfile solve_perturbed(const SemiWaveProblem& problem, double c, double eps,
                                const SemiWaveOptions& opt);

/// The delta-ladder with the regime decision; the semi-wave is the delta = 0
/// fixed point reached by descending from the finest rung.
SemiWaveResult solve_semiwave(const SemiWaveProblem& problem, double c, const SemiWaveOptions& opt);

/// Rightmost x with phi_1(x) = u_1*/2, by linear interpolation.
std::optional<double> half_level_shift(const SemiWaveProfile& profile, double u1_star);

/// M(c) for a profile; infinite when a kernel with mu_i > 0 fails (J1).
ExtendedReal flux_functional(const SemiWaveProblem& problem, const SemiWaveProfile& profile);

struct SpeedEvaluation {
  double c = 0.0;
  double flux = 0.0;            // M(c), 0 in the traveling-wave regime
  Regime regime = Regime::SemiWave;
  double local_max = 0.0;       // max of phi_1 on [-L/10, 0]
  bool ambiguous = false;       // ladder inconclusive even when deepened
};

struct C0Result {
  double c0 = 0.0;
  double flux_at_c0 = 0.0;
  double c_lo = 0.0;
  double c_hi = 0.0;
  std::vector<SpeedEvaluation> evaluations;
  SemiWaveResult at_c0;
};

/// Root of c - M(c) by bisection. A speed whose ladder stays inconclusive
/// after a deep retry counts as having no semi-wave (M = 0).
C0Result find_c0(const SemiWaveProblem& problem, double tol_c, const SemiWaveOptions& opt);

struct CstarBracket {
  bool unbounded = false;
  double lo = 0.0;              // last speed with a semi-wave
  double hi = 0.0;              // first speed without one
  std::vector<SpeedEvaluation> scan;
};

/// Scans c_grid for the semi-wave -> traveling-wave flip, then bisects the
/// flipping cell refine_steps times. An inconclusive ladder is retried with
/// deep_rungs rungs; if still inconclusive the speed counts as "no semi-wave".
CstarBracket bracket_Cstar(const SemiWaveProblem& problem, const std::vector<double>& c_grid,
                           const SemiWaveOptions& opt, int refine_steps = 0,
                           int deep_rungs = 40);

enum class TailKind { Exponential, Algebraic, Flat };
std::string_view to_string(TailKind k);

struct TailReport {
  TailKind kind = TailKind::Flat;
  double rate = 0.0;            // beta for Exponential, exponent for Algebraic
  double r2_exponential = 0.0;
  double r2_algebraic = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  int points = 0;
};

/// Fits u_1* - phi_1 on [-0.8 L, -0.2 L].
TailReport tail_report(const SemiWaveProfile& profile, double u1_star);

}  // namespace nlfb
