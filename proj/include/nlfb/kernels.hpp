#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "nlfb/extended.hpp"

namespace nlfb {

enum class KernelFamily { Gaussian, Laplace, Algebraic, Tent };

std::string_view to_string(KernelFamily family);

/// Parses the config spelling ("gaussian", "laplace", "algebraic", "tent").
std::optional<KernelFamily> parse_kernel_family(std::string_view name);

/// Even, unit-mass dispersal density with closed-form tails.
///
///   Gaussian(scale s)     J(x) = exp(-x^2 / 2s^2) / (s sqrt(2 pi))
///   Laplace(rate r)       J(x) = (r/2) exp(-r|x|)
///   Algebraic(gamma > 1)  J(x) = (gamma-1)/2 (1+|x|)^-gamma
///   Tent(halfwidth a)     J(x) = (1/a) (1 - |x|/a)_+
///
/// All tail quantities are evaluated from antiderivatives, so nothing in
/// the library ever truncates the kernel support.
class Kernel {
public:
  /// Throws std::invalid_argument on a nonpositive parameter or gamma <= 1.
  Kernel(KernelFamily family, double param);

  static Kernel gaussian(double scale) { return {KernelFamily::Gaussian, scale}; }
  static Kernel laplace(double rate) { return {KernelFamily::Laplace, rate}; }
  static Kernel algebraic(double gamma) { return {KernelFamily::Algebraic, gamma}; }
  static Kernel tent(double halfwidth) { return {KernelFamily::Tent, halfwidth}; }

  KernelFamily family() const { return family_; }
  double param() const { return param_; }
  double norm_const() const { return norm_const_; }
  /// Length scale of the family (scale, 1/rate, 1, halfwidth).
  double width() const;
  /// Radius beyond which pointwise use goes through the closed-form tail.
  double trunc_radius() const { return 50.0 * width(); }

  friend bool operator==(const Kernel&, const Kernel&) = default;

private:
  KernelFamily family_;
  double param_;
  double norm_const_;
};

struct KernelConditionReport {
  bool satisfies_J = false;
  bool satisfies_J1 = false;
  bool satisfies_J2 = false;
  std::optional<double> j2_witness;  // lambda with finite exponential moment
  ExtendedReal alpha_star = ExtendedReal::infinity();
  std::optional<double> gamma_tag;

  friend bool operator==(const KernelConditionReport&,
                         const KernelConditionReport&) = default;
};

// ---------------------------------------------------------------------------
// Pointwise quantities

double evaluate(const Kernel& k, double x);

/// int_s^inf J(z) dz. For s < 0 this is 1 - tail_mass(-s).
double tail_mass(const Kernel& k, double s);

/// int_p^q J(z) dz for any p <= q.
double mass(const Kernel& k, double p, double q);

/// int_0^inf x^alpha J(x) dx, infinite for algebraic tails with alpha >= gamma-1.
ExtendedReal moment(const Kernel& k, double alpha);

KernelConditionReport classify(const Kernel& k);

// ---------------------------------------------------------------------------
// Integrated tails. All arguments are distances, 0 <= a <= b.

/// int_a^b tail_mass(z) dz.
double tail_integral(const Kernel& k, double a, double b);
/// int_a^inf tail_mass(z) dz; infinite exactly when (J1) fails.
ExtendedReal tail_integral(const Kernel& k, double a);
/// int_a^b z tail_mass(z) dz.
double tail_first_moment(const Kernel& k, double a, double b);

/// int_0^X x^order J(x) dx for order in {0, 1, 2}.
double partial_moment(const Kernel& k, int order, double X);
/// int_X^inf x J(x) dx.
ExtendedReal upper_first_moment(const Kernel& k, double X);

// ---------------------------------------------------------------------------
// Product-integration weights for piecewise-linear integrands.

/// Weight of a unit hat of half-width h centred at distance s from the
/// evaluation point: int J(s - z) (1 - |z|/h)_+ dz. Sums to 1 over a lattice.
double hat_weight(const Kernel& k, double s, double h);

/// Weight of a constant-one extension starting one lattice step beyond a
/// node at distance s (ramp from 0 to 1 over [s, s+h], then 1): equals
/// tail_integral(s, s+h) / h.
double extension_weight(const Kernel& k, double s, double h);

/// For p < q returns (wp, wq) with int_p^q J(z) l(z) dz = wp l(p) + wq l(q)
/// for every affine l.
std::pair<double, double> segment_weights(const Kernel& k, double p, double q);

/// For 0 <= z1 < z2 returns (w1, w2) with
/// int_{z1}^{z2} tail_mass(z) l(z) dz = w1 l(z1) + w2 l(z2) for affine l.
std::pair<double, double> tail_segment_weights(const Kernel& k, double z1, double z2);

}  // namespace nlfb
