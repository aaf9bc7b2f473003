#include "nlfb/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlfb/errors.hpp"
#include "nlfb/regression.hpp"

namespace nlfb {

namespace {

std::vector<Eigen::Index> in_window(const VectorXd& t, const FitWindow& w) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index k = 0; k < t.size(); ++k)
    if (t[k] >= w.lo && t[k] <= w.hi) idx.push_back(k);
  return idx;
}

void check_series(const VectorXd& t, const VectorXd& y, std::string_view op) {
  if (t.size() != y.size())
    throw ValidationError(std::string(op) + ": time and value series differ in length");
  for (Eigen::Index k = 1; k < t.size(); ++k)
    if (!(t[k] > t[k - 1])) throw ValidationError(std::string(op) + ": times must increase");
}

std::vector<Eigen::Index> window_samples(const VectorXd& t, const VectorXd& y, const FitWindow& w,
                                         std::string_view op, Eigen::Index min_samples) {
  check_series(t, y, op);
  auto idx = in_window(t, w);
  if (static_cast<Eigen::Index>(idx.size()) < min_samples) {
    std::ostringstream msg;
    msg << op << ": insufficient samples in window [" << w.lo << ", " << w.hi << "] ("
        << idx.size() << " < " << min_samples << ")";
    throw ValidationError(msg.str());
  }
  return idx;
}

double r2_of(const VectorXd& y, const VectorXd& fit) {
  const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  const double ss_res = (y - fit).squaredNorm();
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
}

}  // namespace

FitWindow trailing_window(const VectorXd& t, double fraction, double exclude_end) {
  if (t.size() == 0) throw ValidationError("trailing_window: empty time series");
  if (!(fraction > 0 && fraction <= 1))
    throw ValidationError("trailing_window: window_fraction must lie in (0, 1]");
  const double t0 = t[0], t1 = t[t.size() - 1], span = t1 - t0;
  return {t1 - fraction * span, t1 - exclude_end * span};
}

LinearSpeed fit_linear_speed(const VectorXd& t, const VectorXd& y, const FitWindow& w) {
  const auto idx = window_samples(t, y, w, "fit_linear_speed", 10);
  const auto n = static_cast<Eigen::Index>(idx.size());
  VectorXd x(n), v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    x[k] = t[idx[k]];
    v[k] = y[idx[k]];
  }
  const LineFit f = fit_line(x, v);
  return {f.slope, f.slope_stderr, f.r2, w, n};
}

LinearSpeed fit_linear_speed(const VectorXd& t, const VectorXd& y, double window_fraction) {
  return fit_linear_speed(t, y, trailing_window(t, window_fraction));
}

GrowthOrder fit_growth_order(const VectorXd& t, const VectorXd& y, const FitWindow& w) {
  const auto idx = window_samples(t, y, w, "fit_growth_order", 3);
  const auto n = static_cast<Eigen::Index>(idx.size());
  VectorXd x(n), v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(t[idx[k]] > 0 && y[idx[k]] > 0))
      throw ValidationError("fit_growth_order: nonpositive time or value in window");
    x[k] = std::log(t[idx[k]]);
    v[k] = std::log(y[idx[k]]);
  }
  const LineFit f = fit_line(x, v);
  return {f.slope, f.r2, w};
}

GrowthOrder fit_growth_order(const VectorXd& t, const VectorXd& y, double window_fraction) {
  return fit_growth_order(t, y, trailing_window(t, window_fraction));
}

RatioRange tlnt_ratio(const VectorXd& t, const VectorXd& y, const FitWindow& w) {
  const auto idx = window_samples(t, y, w, "tlnt_ratio", 1);
  RatioRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (auto k : idx) {
    if (!(t[k] > 1.0)) throw ValidationError("tlnt_ratio: window must lie in t > 1");
    const double q = y[k] / (t[k] * std::log(t[k]));
    r.min = std::min(r.min, q);
    r.max = std::max(r.max, q);
  }
  return r;
}

std::string_view to_string(LagModel m) { return m == LagModel::Log ? "log" : "power"; }

LagFit fit_lag(const VectorXd& t, const VectorXd& y, double c0, const FitWindow& w, double margin) {
  if (!(c0 > 0)) throw ValidationError("fit_lag: c0 must be positive");
  const auto idx = window_samples(t, y, w, "fit_lag", 3);
  const auto n = static_cast<Eigen::Index>(idx.size());
  VectorXd lt(n), lag(n), llag(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double tk = t[idx[k]];
    if (!(tk > 0)) throw ValidationError("fit_lag: window must lie in t > 0");
    lt[k] = std::log(tk);
    lag[k] = c0 * tk - y[idx[k]];
    if (!(lag[k] > 0)) {
      std::ostringstream msg;
      msg << "fit_lag: negative lag c0 t - h = " << lag[k] << " at t = " << tk
          << "; the front outruns c0, so c0 is too small";
      throw ValidationError(msg.str());
    }
    llag[k] = std::log(lag[k]);
  }
  LagFit out;
  out.window = w;
  const LineFit lf = fit_line(lt, lag);
  out.log_a = lf.slope;
  out.log_b = lf.intercept;
  out.r2_log = lf.r2;
  const LineFit pf = fit_line(lt, llag);
  out.power_q = pf.slope;
  out.power_q_stderr = pf.slope_stderr;
  out.power_a = std::exp(pf.intercept);
  const VectorXd power_curve = (out.power_q * lt.array() + pf.intercept).exp().matrix();
  out.r2_power = r2_of(lag, power_curve);
  out.model = out.r2_power > out.r2_log + margin ? LagModel::Power : LagModel::Log;
  out.within_margin = out.model == LagModel::Log && out.r2_power > out.r2_log;
  return out;
}

ExtendedReal lag_lower_bound(const std::vector<Kernel>& kernels, const VectorXd& mu, double alpha,
                             double c0, double t) {
  if (!(alpha >= 1)) throw ValidationError("lag_lower_bound: alpha must be >= 1");
  if (!(c0 > 0) || !(t >= 0)) throw ValidationError("lag_lower_bound: need c0 > 0 and t >= 0");
  if (static_cast<Eigen::Index>(kernels.size()) > mu.size())
    throw ValidationError("lag_lower_bound: need mu for every kernel");
  double v = 1.0;
  v += alpha == 1.0 ? std::log1p(t) : (std::pow(1.0 + t, 1.0 - alpha) - 1.0) / (1.0 - alpha);
  const double X = 0.5 * c0 * t;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    const double m = mu[static_cast<Eigen::Index>(i)];
    if (m == 0.0) continue;
    v += m * partial_moment(kernels[i], 2, X);
    const ExtendedReal tail = upper_first_moment(kernels[i], X);
    if (tail.is_infinite()) return ExtendedReal::infinity();
    v += m * t * tail.value();
  }
  return ExtendedReal::finite(v);
}

AsymptoticsReport analyze(const VectorXd& t, const VectorXd& g, const VectorXd& h,
                          std::optional<double> c0, const FitWindow& w) {
  AsymptoticsReport r;
  r.window = w;
  auto attempt = [&](auto&& fn) {
    try {
      fn();
    } catch (const ValidationError& e) {
      r.notes.emplace_back(e.what());
    }
  };
  attempt([&] { r.linear_speed = fit_linear_speed(t, h, w); });
  attempt([&] { r.g_speed = fit_linear_speed(t, VectorXd(-g), w); });
  attempt([&] { r.growth = fit_growth_order(t, h, w); });
  attempt([&] { r.tlnt = tlnt_ratio(t, h, w); });
  if (c0 && h.size() > 0)
    attempt([&] { r.lag = fit_lag(t, VectorXd(h.array() - h[0]), *c0, w); });
  return r;
}

}  // namespace nlfb
