#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "nlfb/kernels.hpp"
#include "oracles.hpp"

using namespace nlfb;

namespace {

std::vector<Kernel> sample_kernels() {
  return {Kernel::gaussian(1.0), Kernel::gaussian(0.4), Kernel::laplace(1.0),
          Kernel::laplace(2.5),  Kernel::algebraic(1.5), Kernel::algebraic(2.0),
          Kernel::algebraic(2.5), Kernel::algebraic(3.5), Kernel::tent(1.0),
          Kernel::tent(3.0)};
}

// int_a^b J, split at the kink; compact support is clipped.
double quad_pdf(const Kernel& k, double a, double b) {
  auto J = [&](double x) { return evaluate(k, x); };
  if (k.family() == KernelFamily::Tent) {
    a = std::max(a, -k.param());
    b = std::min(b, k.param());
    if (a >= b) return 0.0;
  }
  if (a < 0.0 && b > 0.0) return oracle::integrate(J, a, 0.0) + oracle::integrate(J, 0.0, b);
  return oracle::integrate(J, a, b);
}

// Tent has a second kink at its support edge.
double quad_tail_fn(const Kernel& k, double a, double b, auto weight) {
  auto f = [&](double z) { return tail_mass(k, z) * weight(z); };
  if (k.family() == KernelFamily::Tent && a < k.param() && b > k.param())
    return oracle::integrate(f, a, k.param()) + oracle::integrate(f, k.param(), b);
  return oracle::integrate(f, a, b);
}

}  // namespace

TEST_CASE("evaluate: spec values") {
  CHECK(evaluate(Kernel::laplace(1.0), 0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(evaluate(Kernel::gaussian(1.0), -3.0) == evaluate(Kernel::gaussian(1.0), 3.0));

  // Normalisation of (1+|x|)^-2 from quadrature, independent of norm_const.
  const double raw_mass =
      2.0 * oracle::integrate([](double x) { return std::pow(1.0 + x, -2.0); }, 0.0, oracle::inf);
  CHECK(evaluate(Kernel::algebraic(2.0), 0.0) == doctest::Approx(1.0 / raw_mass).epsilon(1e-10));
  CHECK(evaluate(Kernel::algebraic(2.0), 0.0) == doctest::Approx(0.5));
}

TEST_CASE("kernel invariants: evenness, positivity, unit mass") {
  for (const auto& k : sample_kernels()) {
    CAPTURE(to_string(k.family()));
    CAPTURE(k.param());
    CHECK(evaluate(k, 0.0) > 0.0);
    for (double x : {0.1, 0.7, 2.0, 9.0, 40.0}) {
      CHECK(evaluate(k, x) >= 0.0);
      CHECK(evaluate(k, x) == evaluate(k, -x));
    }
    CHECK(moment(k, 0.0).value() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(2.0 * quad_pdf(k, 0.0, oracle::inf) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(tail_mass(k, 0.0) == 0.5);
  }
}

TEST_CASE("tail_mass: spec values") {
  const auto lap = Kernel::laplace(1.0);
  CHECK(tail_mass(lap, 0.0) == 0.5);
  CHECK(tail_mass(lap, 2.0) == doctest::Approx(0.5 * std::exp(-2.0)).epsilon(1e-14));
  CHECK(tail_mass(lap, 2.0) == doctest::Approx(quad_pdf(lap, 2.0, oracle::inf)).epsilon(1e-10));

  const auto alg = Kernel::algebraic(2.0);
  CHECK(quad_pdf(alg, 1.0, oracle::inf) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(tail_mass(alg, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("tail_mass: monotone, vanishing, matches truncated quadrature plus remainder") {
  for (const auto& k : sample_kernels()) {
    CAPTURE(to_string(k.family()));
    CAPTURE(k.param());
    double prev = tail_mass(k, 0.0);
    for (double s = 0.05; s < 200.0; s *= 1.3) {
      const double t = tail_mass(k, s);
      CHECK(t <= prev);
      prev = t;
    }
    CHECK(tail_mass(k, 1e12) < 1e-5);
    const double R = 50.0 * k.width();
    CHECK(R == doctest::Approx(k.trunc_radius()));
    for (double s : {0.0, 0.3, 1.7, 6.0}) {
      const double lhs = tail_mass(k, s);
      const double rhs = quad_pdf(k, s, s + R) + tail_mass(k, s + R);
      CHECK(std::abs(lhs - rhs) < 1e-8);
    }
  }
}

TEST_CASE("mass: agrees with quadrature across the kink") {
  for (const auto& k : sample_kernels()) {
    for (auto [p, q] : {std::pair{-2.0, 1.5}, {-3.0, -0.5}, {0.25, 4.0}, {-0.1, 0.1}}) {
      CHECK(mass(k, p, q) == doctest::Approx(quad_pdf(k, p, q)).epsilon(1e-10));
    }
  }
}

TEST_CASE("moment: spec values and divergence") {
  const auto lap = Kernel::laplace(1.0);
  const double oracle_m1 =
      oracle::integrate([&](double x) { return x * evaluate(lap, x); }, 0.0, oracle::inf);
  CHECK(oracle_m1 == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(moment(lap, 1.0).value() == doctest::Approx(oracle_m1).epsilon(1e-12));

  CHECK(moment(Kernel::algebraic(2.0), 1.0).is_infinite());
  CHECK(moment(Kernel::algebraic(3.5), 2.5).is_infinite());
  CHECK(moment(Kernel::algebraic(3.5), 2.4).is_finite());

  for (const auto& k : sample_kernels()) {
    for (double alpha : {0.5, 1.0, 1.3, 2.0}) {
      const auto m = moment(k, alpha);
      if (m.is_infinite()) continue;
      auto f = [&](double x) { return std::pow(x, alpha) * evaluate(k, x); };
      double q = oracle::integrate(f, 0.0, 1.0);
      if (k.family() == KernelFamily::Tent)
        q += oracle::integrate(f, 1.0, std::max(1.0, k.param()));
      else
        q += oracle::integrate(f, 1.0, oracle::inf, 1e-11);
      CAPTURE(to_string(k.family()));
      CAPTURE(alpha);
      CHECK(m.value() == doctest::Approx(q).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(moment(lap, -1.0), std::invalid_argument);
}

TEST_CASE("moment: mass outside [0,1] is nondecreasing in alpha") {
  for (const auto& k : {Kernel::gaussian(2.0), Kernel::laplace(0.5), Kernel::algebraic(4.0)}) {
    double prev = 0.0;
    for (double alpha = 0.0; alpha <= 2.0; alpha += 0.25) {
      const double inner = oracle::integrate(
          [&](double x) { return std::pow(x, alpha) * evaluate(k, x); }, 0.0, 1.0);
      const double outer = moment(k, alpha).value() - inner;
      CHECK(outer >= prev - 1e-12);
      prev = outer;
    }
  }
}

TEST_CASE("classify: spec values and implications") {
  const auto g = classify(Kernel::gaussian(1.0));
  CHECK(g.satisfies_J);
  CHECK(g.satisfies_J1);
  CHECK(g.satisfies_J2);
  CHECK(g.alpha_star.is_infinite());

  const auto a25 = classify(Kernel::algebraic(2.5));
  CHECK(a25.satisfies_J1);
  CHECK_FALSE(a25.satisfies_J2);
  CHECK(a25.alpha_star.value() == doctest::Approx(1.5));
  CHECK(a25.gamma_tag.value() == 2.5);

  CHECK_FALSE(classify(Kernel::algebraic(1.5)).satisfies_J1);
  CHECK(classify(Kernel::laplace(2.0)).j2_witness.value() == doctest::Approx(1.0));

  for (double gamma : {1.2, 1.9, 2.0, 2.01, 3.0, 5.0}) {
    const auto r = classify(Kernel::algebraic(gamma));
    CHECK(r.satisfies_J1 == (gamma > 2.0));
    CHECK(r.alpha_star.value() == doctest::Approx(gamma - 1.0));
  }
  for (const auto& k : sample_kernels()) {
    const auto r = classify(k);
    if (r.satisfies_J2) {
      CHECK(r.satisfies_J1);
      // the witness really gives a finite exponential moment
      const double lam = r.j2_witness.value();
      const double em = oracle::integrate(
          [&](double x) { return std::exp(lam * x) * evaluate(k, x); }, 0.0,
          k.family() == KernelFamily::Tent ? k.param() : 200.0 * k.width());
      CHECK(std::isfinite(em));
    }
    CHECK(classify(k) == r);
  }
}

TEST_CASE("integrated tails against quadrature") {
  for (const auto& k : sample_kernels()) {
    CAPTURE(to_string(k.family()));
    CAPTURE(k.param());
    for (auto [a, b] : {std::pair{0.0, 0.05}, {0.0, 3.0}, {1.2, 1.25}, {2.0, 30.0}, {0.5, 2.5}}) {
      const double I = quad_tail_fn(k, a, b, [](double) { return 1.0; });
      const double K = quad_tail_fn(k, a, b, [](double z) { return z; });
      CHECK(tail_integral(k, a, b) == doctest::Approx(I).epsilon(1e-10));
      CHECK(tail_first_moment(k, a, b) == doctest::Approx(K).epsilon(1e-10));
    }
    const auto tail_inf = tail_integral(k, 1.0);
    CHECK(tail_inf.is_finite() == classify(k).satisfies_J1);
    if (tail_inf.is_finite()) {
      const double b = k.family() == KernelFamily::Tent ? k.param() : oracle::inf;
      if (b > 1.0)
        CHECK(tail_inf.value() ==
              doctest::Approx(quad_tail_fn(k, 1.0, b, [](double) { return 1.0; })).epsilon(1e-9));
    }
  }
}

TEST_CASE("partial and upper moments against quadrature") {
  for (const auto& k : sample_kernels()) {
    CAPTURE(to_string(k.family()));
    CAPTURE(k.param());
    for (double X : {0.3, 2.0, 17.0}) {
      for (int n : {0, 1, 2}) {
        auto f = [&](double x) { return std::pow(x, n) * evaluate(k, x); };
        double q = 0.0;
        if (k.family() == KernelFamily::Tent && X > k.param())
          q = oracle::integrate(f, 0.0, k.param());
        else
          q = oracle::integrate(f, 0.0, X);
        CHECK(partial_moment(k, n, X) == doctest::Approx(q).epsilon(1e-10));
      }
      const auto up = upper_first_moment(k, X);
      CHECK(up.is_finite() == classify(k).satisfies_J1);
      if (up.is_finite() && (k.family() != KernelFamily::Tent || X < k.param())) {
        const double b = k.family() == KernelFamily::Tent ? k.param() : oracle::inf;
        const double q = oracle::integrate([&](double x) { return x * evaluate(k, x); }, X, b, 1e-11);
        CHECK(up.value() == doctest::Approx(q).epsilon(1e-8));
      }
    }
  }
  CHECK_THROWS_AS(partial_moment(Kernel::laplace(1.0), 3, 1.0), std::invalid_argument);
}

TEST_CASE("lattice weights: hat weights reproduce quadrature and sum to one") {
  for (const auto& k : sample_kernels()) {
    CAPTURE(to_string(k.family()));
    CAPTURE(k.param());
    const double h = 0.1;
    for (double s : {0.0, 0.1, 0.3, 2.0, 7.5}) {
      auto f = [&](double z) { return evaluate(k, s - z) * (1.0 - std::abs(z) / h); };
      double q = oracle::integrate(f, -h, 0.0) + oracle::integrate(f, 0.0, h);
      if (s > 0.0 && s < h) q = oracle::integrate(f, -h, s) + oracle::integrate(f, s, h);
      CHECK(hat_weight(k, s, h) == doctest::Approx(q).epsilon(1e-9));
    }
    const int n = 400;
    double sum = hat_weight(k, 0.0, h);
    for (int j = 1; j <= n; ++j) sum += 2.0 * hat_weight(k, j * h, h);
    sum += 2.0 * extension_weight(k, n * h, h);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("segment weights integrate affine functions exactly") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-6.0, 6.0);
  for (const auto& k : sample_kernels()) {
    for (int trial = 0; trial < 8; ++trial) {
      double p = U(rng), q = U(rng);
      if (p > q) std::swap(p, q);
      const double lp = 0.3 + 0.1 * trial, lq = 1.7 - 0.2 * trial;
      auto ell = [&](double z) { return lp + (lq - lp) * (z - p) / (q - p); };
      auto f = [&](double z) { return evaluate(k, z) * ell(z); };
      double ref = 0.0;
      std::vector<double> cuts{p};
      for (double c : {-k.param(), 0.0, k.param()})
        if (k.family() == KernelFamily::Tent || c == 0.0)
          if (c > p && c < q) cuts.push_back(c);
      cuts.push_back(q);
      for (size_t i = 0; i + 1 < cuts.size(); ++i) ref += oracle::integrate(f, cuts[i], cuts[i + 1]);
      const auto [wp, wq] = segment_weights(k, p, q);
      CHECK(wp * lp + wq * lq == doctest::Approx(ref).epsilon(1e-9));
      CHECK(wp >= -1e-15);
      CHECK(wq >= -1e-15);
    }
  }
}

TEST_CASE("tail segment weights integrate affine functions exactly") {
  for (const auto& k : sample_kernels()) {
    for (auto [z1, z2] : {std::pair{0.0, 0.05}, {0.4, 2.0}, {5.0, 5.1}, {0.0, 12.0}}) {
      const double l1 = 2.0, l2 = 0.5;
      auto ell = [&](double z) { return l1 + (l2 - l1) * (z - z1) / (z2 - z1); };
      const double ref = quad_tail_fn(k, z1, z2, ell);
      const auto [w1, w2] = tail_segment_weights(k, z1, z2);
      CHECK(w1 * l1 + w2 * l2 == doctest::Approx(ref).epsilon(1e-10));
    }
  }
}

TEST_CASE("invalid kernels are rejected") {
  CHECK_THROWS_AS(Kernel::algebraic(1.0), std::invalid_argument);
  CHECK_THROWS_AS(Kernel::laplace(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Kernel::gaussian(-1.0), std::invalid_argument);
  CHECK(parse_kernel_family("laplace") == KernelFamily::Laplace);
  CHECK_FALSE(parse_kernel_family("cauchy").has_value());
}
