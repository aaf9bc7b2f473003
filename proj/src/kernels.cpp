#include "nlfb/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace nlfb {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

// int_A^B y^e dy for 0 < A <= B, written to stay accurate when B - A << A.
double power_integral(double e, double A, double B) {
  const double rel = std::log1p((B - A) / A);
  if (e == -1.0) return rel;
  return std::pow(A, e + 1.0) * std::expm1((e + 1.0) * rel) / (e + 1.0);
}

// Antiderivatives of the tail for the Gaussian family, a = s*sqrt(2).
double gauss_tail_antideriv(double z, double a) {
  return 0.5 * (z * std::erfc(z / a) - a / kSqrtPi * std::exp(-(z * z) / (a * a)));
}
double gauss_tail_moment_antideriv(double z, double a) {
  const double r = z / a;
  return 0.5 * ((0.5 * z * z - 0.25 * a * a) * std::erfc(r) -
                a * z / (2.0 * kSqrtPi) * std::exp(-r * r));
}

// Tent antiderivatives, w = (1 - z/a)_+.
double tent_tail_antideriv(double z, double a) {
  const double w = std::max(1.0 - z / a, 0.0);
  return -a / 6.0 * w * w * w;
}
double tent_tail_moment_antideriv(double z, double a) {
  const double w = std::max(1.0 - z / a, 0.0);
  return -0.5 * a * a * (w * w * w / 3.0 - w * w * w * w / 4.0);
}

// int_p^q J(z) (q - z)/(q - p) dz.
double ramp_weight(const Kernel& k, double p, double q) {
  const double len = q - p;
  if (p >= 0.0) return tail_mass(k, p) - tail_integral(k, p, q) / len;
  if (q <= 0.0) return mass(k, -q, -p) - ramp_weight(k, -q, -p);
  return (tail_integral(k, 0.0, -p) - tail_integral(k, 0.0, q) + q -
          len * tail_mass(k, -p)) /
         len;
}

// (int_a^b f(z) (b - z) dz, int_a^b f(z) (z - a) dz) / (b - a) by 5-point
// Gauss-Legendre on each piece between kinks. Used on short segments, where
// differences of antiderivatives lose everything to cancellation.
template <class F>
std::pair<double, double> short_segment(F f, double a, double b, std::initializer_list<double> kinks) {
  static const double r = 2.0 * std::sqrt(10.0 / 7.0);
  static const double x1 = std::sqrt(5.0 - r) / 3.0, x2 = std::sqrt(5.0 + r) / 3.0;
  static const double w0 = 128.0 / 225.0, w1 = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0,
                      w2 = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
  static const double nodes[5] = {-x2, -x1, 0.0, x1, x2};
  static const double weights[5] = {w2, w1, w0, w1, w2};
  std::vector<double> cuts{a};
  for (double c : kinks)
    if (c > a && c < b) cuts.push_back(c);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  const double len = b - a;
  double wa = 0.0, wb = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]), half = 0.5 * (cuts[i + 1] - cuts[i]);
    for (int j = 0; j < 5; ++j) {
      const double z = mid + half * nodes[j];
      const double v = weights[j] * half * f(z);
      wa += v * (b - z) / len;
      wb += v * (z - a) / len;
    }
  }
  return {wa, wb};
}

bool is_short(const Kernel& k, double len) { return len < 1e-2 * k.width(); }

}  // namespace

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::Laplace: return "laplace";
    case KernelFamily::Algebraic: return "algebraic";
    case KernelFamily::Tent: return "tent";
  }
  return "unknown";
}

std::optional<KernelFamily> parse_kernel_family(std::string_view name) {
  if (name == "gaussian") return KernelFamily::Gaussian;
  if (name == "laplace") return KernelFamily::Laplace;
  if (name == "algebraic") return KernelFamily::Algebraic;
  if (name == "tent") return KernelFamily::Tent;
  return std::nullopt;
}

Kernel::Kernel(KernelFamily family, double param) : family_(family), param_(param) {
  if (!(param > 0.0) || !std::isfinite(param))
    throw std::invalid_argument("kernel parameter must be positive and finite");
  switch (family) {
    case KernelFamily::Gaussian:
      norm_const_ = 1.0 / (param * std::sqrt(2.0 * std::numbers::pi));
      break;
    case KernelFamily::Laplace:
      norm_const_ = 0.5 * param;
      break;
    case KernelFamily::Algebraic:
      if (!(param > 1.0))
        throw std::invalid_argument("algebraic kernel needs gamma > 1 for unit mass");
      norm_const_ = 0.5 * (param - 1.0);
      break;
    case KernelFamily::Tent:
      norm_const_ = 1.0 / param;
      break;
  }
}

double Kernel::width() const {
  switch (family_) {
    case KernelFamily::Gaussian: return param_;
    case KernelFamily::Laplace: return 1.0 / param_;
    case KernelFamily::Algebraic: return 1.0;
    case KernelFamily::Tent: return param_;
  }
  return 1.0;
}

double evaluate(const Kernel& k, double x) {
  const double ax = std::abs(x);
  const double p = k.param();
  switch (k.family()) {
    case KernelFamily::Gaussian: return k.norm_const() * std::exp(-0.5 * (ax / p) * (ax / p));
    case KernelFamily::Laplace: return k.norm_const() * std::exp(-p * ax);
    case KernelFamily::Algebraic: return k.norm_const() * std::pow(1.0 + ax, -p);
    case KernelFamily::Tent: return ax < p ? k.norm_const() * (1.0 - ax / p) : 0.0;
  }
  return 0.0;
}

double tail_mass(const Kernel& k, double s) {
  if (s < 0.0) return 1.0 - tail_mass(k, -s);
  const double p = k.param();
  switch (k.family()) {
    case KernelFamily::Gaussian: return 0.5 * std::erfc(s / (p * std::numbers::sqrt2));
    case KernelFamily::Laplace: return 0.5 * std::exp(-p * s);
    case KernelFamily::Algebraic: return 0.5 * std::pow(1.0 + s, 1.0 - p);
    case KernelFamily::Tent: {
      const double w = std::max(1.0 - s / p, 0.0);
      return 0.5 * w * w;
    }
  }
  return 0.0;
}

double mass(const Kernel& k, double p, double q) {
  if (p >= 0.0) return tail_mass(k, p) - tail_mass(k, q);
  if (q <= 0.0) return tail_mass(k, -q) - tail_mass(k, -p);
  return 1.0 - tail_mass(k, -p) - tail_mass(k, q);
}

ExtendedReal moment(const Kernel& k, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("moment order must be nonnegative");
  const double p = k.param();
  switch (k.family()) {
    case KernelFamily::Gaussian:
      return ExtendedReal::finite(std::pow(2.0, 0.5 * alpha) * std::pow(p, alpha) *
                                  std::tgamma(0.5 * (alpha + 1.0)) / (2.0 * kSqrtPi));
    case KernelFamily::Laplace:
      return ExtendedReal::finite(std::tgamma(alpha + 1.0) / (2.0 * std::pow(p, alpha)));
    case KernelFamily::Algebraic:
      if (alpha >= p - 1.0) return ExtendedReal::infinity();
      return ExtendedReal::finite(k.norm_const() * std::beta(alpha + 1.0, p - alpha - 1.0));
    case KernelFamily::Tent:
      return ExtendedReal::finite(std::pow(p, alpha) / ((alpha + 1.0) * (alpha + 2.0)));
  }
  return ExtendedReal::infinity();
}

KernelConditionReport classify(const Kernel& k) {
  KernelConditionReport r;
  // Every constructible kernel is continuous, bounded, even, unit mass, J(0) > 0.
  r.satisfies_J = evaluate(k, 0.0) > 0.0;
  r.satisfies_J1 = moment(k, 1.0).is_finite();
  switch (k.family()) {
    case KernelFamily::Gaussian:
    case KernelFamily::Tent:
      r.satisfies_J2 = true;
      r.j2_witness = 1.0 / k.width();
      break;
    case KernelFamily::Laplace:
      r.satisfies_J2 = true;
      r.j2_witness = 0.5 * k.param();
      break;
    case KernelFamily::Algebraic:
      r.satisfies_J2 = false;
      r.alpha_star = ExtendedReal::finite(k.param() - 1.0);
      r.gamma_tag = k.param();
      break;
  }
  return r;
}

double tail_integral(const Kernel& k, double a, double b) {
  if (b <= a) return 0.0;
  const double p = k.param();
  switch (k.family()) {
    case KernelFamily::Gaussian: {
      const double s = p * std::numbers::sqrt2;
      return gauss_tail_antideriv(b, s) - gauss_tail_antideriv(a, s);
    }
    case KernelFamily::Laplace:
      return -0.5 / p * std::exp(-p * a) * std::expm1(-p * (b - a));
    case KernelFamily::Algebraic:
      return 0.5 * power_integral(1.0 - p, 1.0 + a, 1.0 + b);
    case KernelFamily::Tent:
      return tent_tail_antideriv(b, p) - tent_tail_antideriv(a, p);
  }
  return 0.0;
}

ExtendedReal tail_integral(const Kernel& k, double a) {
  const double p = k.param();
  switch (k.family()) {
    case KernelFamily::Gaussian:
      return ExtendedReal::finite(-gauss_tail_antideriv(a, p * std::numbers::sqrt2));
    case KernelFamily::Laplace:
      return ExtendedReal::finite(0.5 / p * std::exp(-p * a));
    case KernelFamily::Algebraic:
      if (p <= 2.0) return ExtendedReal::infinity();
      return ExtendedReal::finite(0.5 * std::pow(1.0 + a, 2.0 - p) / (p - 2.0));
    case KernelFamily::Tent:
      return ExtendedReal::finite(-tent_tail_antideriv(a, p));
  }
  return ExtendedReal::infinity();
}

double tail_first_moment(const Kernel& k, double a, double b) {
  if (b <= a) return 0.0;
  const double p = k.param();
  switch (k.family()) {
    case KernelFamily::Gaussian: {
      const double s = p * std::numbers::sqrt2;
      return gauss_tail_moment_antideriv(b, s) - gauss_tail_moment_antideriv(a, s);
    }
    case KernelFamily::Laplace: {
      auto F = [p](double z) { return -0.5 * std::exp(-p * z) * (z / p + 1.0 / (p * p)); };
      return F(b) - F(a);
    }
    case KernelFamily::Algebraic:
      // z = y - 1 with y = 1 + z
      return 0.5 * (power_integral(2.0 - p, 1.0 + a, 1.0 + b) -
                    power_integral(1.0 - p, 1.0 + a, 1.0 + b));
    case KernelFamily::Tent:
      return tent_tail_moment_antideriv(b, p) - tent_tail_moment_antideriv(a, p);
  }
  return 0.0;
}

double partial_moment(const Kernel& k, int order, double X) {
  if (X <= 0.0) return 0.0;
  // Integration by parts against the tail: x^n J = -x^n T'.
  switch (order) {
    case 0: return 0.5 - tail_mass(k, X);
    case 1: return tail_integral(k, 0.0, X) - X * tail_mass(k, X);
    case 2: return 2.0 * tail_first_moment(k, 0.0, X) - X * X * tail_mass(k, X);
    default: throw std::invalid_argument("partial_moment: order must be 0, 1 or 2");
  }
}

ExtendedReal upper_first_moment(const Kernel& k, double X) {
  const ExtendedReal rest = tail_integral(k, X);
  if (rest.is_infinite()) return rest;
  return ExtendedReal::finite(X * tail_mass(k, X) + rest.value());
}

double hat_weight(const Kernel& k, double s, double h) {
  s = std::abs(s);
  if (s >= h) return (tail_integral(k, s - h, s) - tail_integral(k, s, s + h)) / h;
  const auto left = segment_weights(k, s - h, s);
  const auto right = segment_weights(k, s, s + h);
  return left.second + right.first;
}

double extension_weight(const Kernel& k, double s, double h) {
  return tail_integral(k, s, s + h) / h;
}

std::pair<double, double> segment_weights(const Kernel& k, double p, double q) {
  if (!(q > p)) return {0.0, 0.0};
  if (is_short(k, q - p)) {
    const double a = k.family() == KernelFamily::Tent ? k.param() : 0.0;
    return short_segment([&](double z) { return evaluate(k, z); }, p, q, {-a, 0.0, a});
  }
  const double wp = ramp_weight(k, p, q);
  return {wp, mass(k, p, q) - wp};
}

std::pair<double, double> tail_segment_weights(const Kernel& k, double z1, double z2) {
  if (!(z2 > z1)) return {0.0, 0.0};
  const double len = z2 - z1;
  if (is_short(k, len)) {
    const double a = k.family() == KernelFamily::Tent ? k.param() : 0.0;
    return short_segment([&](double z) { return tail_mass(k, z); }, z1, z2, {a});
  }
  const double I = tail_integral(k, z1, z2);
  const double about_z1 = tail_first_moment(k, z1, z2) - z1 * I;
  return {I - about_z1 / len, about_z1 / len};
}

}  // namespace nlfb
