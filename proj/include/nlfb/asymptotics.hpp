#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlfb/extended.hpp"
#include "nlfb/kernels.hpp"

namespace nlfb {

using Eigen::VectorXd;

struct FitWindow {
  double lo = 0.0;
  double hi = 0.0;
};

/// Trailing `fraction` of [t_0, t_end] minus the final `exclude_end` of it.
FitWindow trailing_window(const VectorXd& t, double fraction = 0.5, double exclude_end = 0.02);

struct LinearSpeed {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double r2 = 0.0;
  FitWindow window;
  Eigen::Index samples = 0;
};

/// Least-squares slope of y on the window; at least 10 samples.
LinearSpeed fit_linear_speed(const VectorXd& t, const VectorXd& y, const FitWindow& w);
LinearSpeed fit_linear_speed(const VectorXd& t, const VectorXd& y, double window_fraction = 0.5);

struct GrowthOrder {
  double p = 0.0;
  double r2 = 0.0;
  FitWindow window;
};

/// log y against log t.
GrowthOrder fit_growth_order(const VectorXd& t, const VectorXd& y, const FitWindow& w);
GrowthOrder fit_growth_order(const VectorXd& t, const VectorXd& y, double window_fraction = 0.5);

struct RatioRange {
  double min = 0.0;
  double max = 0.0;
};

/// Range of y / (t ln t) on the window (t > 1 there).
RatioRange tlnt_ratio(const VectorXd& t, const VectorXd& y, const FitWindow& w);

enum class LagModel { Log, Power };
std::string_view to_string(LagModel m);

struct LagFit {
  LagModel model = LagModel::Log;
  double log_a = 0.0, log_b = 0.0;      // l = a ln t + b
  double power_a = 0.0, power_q = 0.0;  // l = a t^q
  double power_q_stderr = 0.0;
  double r2_log = 0.0, r2_power = 0.0;  // both measured on l itself
  bool within_margin = false;           // the log preference decided the choice
  FitWindow window;
};

/// Fits the lag l(t) = c0 t - y(t) with a ln t + b and with a t^q; the log
/// model wins unless the power model's R^2 is larger by more than `margin`.
LagFit fit_lag(const VectorXd& t, const VectorXd& y, double c0, const FitWindow& w,
               double margin = 0.02);

/// 1 + int_0^t (1+x)^-alpha dx + int_0^{c0 t/2} x^2 Jh dx + t int_{c0 t/2}^inf x Jh dx,
/// Jh = sum_i mu_i J_i. Infinite when the last integral diverges.
ExtendedReal lag_lower_bound(const std::vector<Kernel>& kernels, const VectorXd& mu, double alpha,
                             double c0, double t);

struct AsymptoticsReport {
  FitWindow window;
  std::optional<LinearSpeed> linear_speed;
  std::optional<LinearSpeed> g_speed;   // slope of -g
  std::optional<GrowthOrder> growth;
  std::optional<RatioRange> tlnt;
  std::optional<LagFit> lag;
  std::vector<std::string> notes;       // fits that could not be made, and why
};

/// Runs every fit that applies to (t, g, h). The lag needs c0 and is taken
/// on the displacement h - h[0].
AsymptoticsReport analyze(const VectorXd& t, const VectorXd& g, const VectorXd& h,
                          std::optional<double> c0, const FitWindow& w);

}  // namespace nlfb
