#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlfb/convolution.hpp"
#include "nlfb/kernels.hpp"
#include "nlfb/reaction.hpp"

namespace nlfb {

/// Reaction system, kernels and the lattice operators for one step dx.
/// A single kernel is shared by all diffusing species.
class FbModel {
public:
  FbModel(ReactionSystem system, std::vector<Kernel> kernels, double dx,
          Eigen::Index fft_threshold = 128);

  const ReactionSystem& system() const { return system_; }
  const std::vector<Kernel>& kernels() const { return kernels_; }
  double dx() const { return dx_; }
  const VectorXd& u_star() const { return u_star_; }
  double lipschitz() const { return lipschitz_; }
  /// Null for non-diffusing species.
  const LatticeConvolution* convolution(int i) const { return conv_[i].get(); }
  /// (wp, wq) of segment_weights(k dx, (k + 1) dx) for species i.
  std::pair<double, double> cell_weights(int i, Eigen::Index k) const;

private:
  ReactionSystem system_;
  std::vector<Kernel> kernels_;
  double dx_;
  VectorXd u_star_;
  double lipschitz_ = 0.0;
  std::vector<std::shared_ptr<LatticeConvolution>> conv_;
  mutable std::vector<std::vector<std::pair<double, double>>> cells_;
};

/// Fronts are kept in lattice units as integer + fraction in [0, 1), so
/// g = (kg + fg) dx and h = (kh + fh) dx. Active nodes are the lattice
/// points strictly inside (g, h); U vanishes at the fronts themselves.
struct FrontierState {
  double t = 0.0;
  double dx = 0.0;
  Eigen::Index kg = 0;
  double fg = 0.0;
  Eigen::Index kh = 0;
  double fh = 0.0;
  MatrixXd values;  // m x active()

  double g() const { return (static_cast<double>(kg) + fg) * dx; }
  double h() const { return (static_cast<double>(kh) + fh) * dx; }
  Eigen::Index first_node() const { return kg + 1; }
  Eigen::Index last_node() const { return fh > 0.0 ? kh : kh - 1; }
  Eigen::Index active() const { return last_node() - first_node() + 1; }
  double x(Eigen::Index col) const { return static_cast<double>(first_node() + col) * dx; }
  /// Column of lattice node k, or -1 when inactive.
  Eigen::Index column(Eigen::Index k) const {
    return k >= first_node() && k <= last_node() ? k - first_node() : -1;
  }
};

enum class InitialShape { Cosine2, Bump, Constant };
std::string_view to_string(InitialShape s);
std::optional<InitialShape> parse_initial_shape(std::string_view name);

/// U(0, x) = amplitude * profile(x) * u_ref on (-h0, h0); h0 need not be a
/// lattice point.
FrontierState initial_state(const FbModel& model, double h0, InitialShape shape,
                            const VectorXd& amplitude, double dx);

struct FrontSpeeds {
  double g_dot = 0.0;  // <= 0
  double h_dot = 0.0;  // >= 0
};

/// Integral front laws with exact kernel tails on the piecewise-linear
/// interpolant of U (zero at the fronts).
FrontSpeeds boundary_speeds(const FbModel& model, const FrontierState& state);

/// Time derivative of U at the active nodes for the given values on the
/// state's domain.
MatrixXd rhs(const FbModel& model, const FrontierState& state, const MatrixXd& U,
             LatticeConvolution::Path path = LatticeConvolution::Path::Auto);

struct StepStats {
  double min_before_clamp = 0.0;
  double max_excess_before_clamp = 0.0;  // max over species of U_i - u_hat_i
  FrontSpeeds speeds;
};

/// Heun for U on the current domain, forward Euler for the fronts, then
/// activation of the newly covered nodes with value 0.
StepStats step(const FbModel& model, FrontierState& state, double dt, double tol = 1e-6);

struct SimulationConfig {
  double h0 = 10.0;
  InitialShape shape = InitialShape::Cosine2;
  VectorXd amplitude;          // per species, multiplies u*
  double dx = 0.05;
  double cfl_factor = 0.5;
  double T_final = 100.0;
  double sample_dt = 1.0;
  std::vector<double> snapshot_times;
  double wall_clock_budget = 0.0;  // seconds, 0 = unlimited
  Eigen::Index fft_threshold = 128;
};

struct Snapshot {
  double t = 0.0;
  VectorXd x;
  MatrixXd values;
};

struct Trajectory {
  double dx = 0.0;
  double dt = 0.0;
  std::vector<double> t, g, h, g_dot, h_dot;
  std::vector<VectorXd> center;   // U at x = 0
  std::vector<double> max_value;  // max over species and nodes
  /// max_i max_x U_i - W_i(t), W the ODE solution from the componentwise max of u0.
  std::vector<double> sandwich_excess;
  double min_before_clamp = 0.0;
  std::vector<Snapshot> snapshots;
  FrontierState final_state;
};

/// Time step used by run: cfl_factor / (max d + Lipschitz bound), shrunk so
/// that sample_dt is an integer number of steps.
double stable_dt(const FbModel& model, const SimulationConfig& cfg);

Trajectory run(const FbModel& model, const SimulationConfig& cfg);

enum class Outcome { Spreading, Vanishing, Undecided };
std::string_view to_string(Outcome o);

struct OutcomeThresholds {
  double growth_cells = 10.0;  // h growth over the last quarter, in dx
  double center_rel = 0.05;
  double vanish_tol = 1e-3;
};

/// Heuristic reading of the spreading/vanishing dichotomy on a finite horizon.
Outcome classify_outcome(const Trajectory& traj, const VectorXd& u_star,
                         const OutcomeThresholds& th = {});

}  // namespace nlfb
