#include "thermosep/continuum.hpp"
#include "thermosep/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace thermosep;

namespace {

ModeFunction mode(ModeFamily family, double center, double width) {
  ModeFunction m;
  m.family = family;
  m.center = center;
  m.width = width;
  return m;
}

Complex gaussian_hat(double p, double center, double width) {
  return std::pow(2.0 * width * width / std::numbers::pi, 0.25) * std::exp(-width * width * p * p) *
         std::exp(Complex(0.0, -p * center));
}

// trapezoid rule on a fine uniform grid
Complex gaussian_kernel_oracle(double c1, double c2, double w, double beta, int points) {
  const double cutoff = 12.0 / w;
  const double h = 2.0 * cutoff / (points - 1);
  Complex sum = 0.0;
  for (int k = 0; k < points; ++k) {
    const double p = -cutoff + k * h;
    const Complex v = std::conj(gaussian_hat(p, c1, w)) * gaussian_hat(p, c2, w) / (1.0 + std::exp(beta * p * p));
    sum += (k == 0 || k == points - 1 ? 0.5 : 1.0) * h * v;
  }
  return sum;
}

double momentum_norm(const ModeFunction& f) {
  return composite_gauss([&](double p) { return std::norm(f.momentum(p)); }, -2000.0, 2000.0, {});
}

} // namespace

TEST_CASE("mode profiles") {
  const auto g = mode(ModeFamily::gaussian, 1.0, 0.5);
  for (double p : {-3.0, 0.0, 0.7, 2.0}) {
    CHECK(std::abs(g.momentum(p) - gaussian_hat(p, 1.0, 0.5)) < 1e-14);
  }
  for (auto fam : {ModeFamily::gaussian, ModeFamily::cosine_bump, ModeFamily::exponential}) {
    const auto m = mode(fam, 0.3, 0.8);
    const auto [lo, hi] = m.support();
    double x_norm = composite_gauss([&](double x) { return m.position(x) * m.position(x); }, lo, hi, {});
    CHECK(x_norm == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mode_family_from_name(to_string(fam)) == fam);
  }
  CHECK(momentum_norm(mode(ModeFamily::cosine_bump, 0.0, 1.0)) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK_THROWS_AS(mode_family_from_name("lorentz"), PreconditionError);
}

TEST_CASE("composite_gauss") {
  int panels = 0;
  const double v = composite_gauss([](double x) { return std::exp(-x * x); }, -8.0, 8.0, {}, &panels);
  CHECK(v == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-13));
  CHECK(panels >= 8);
  const double kink = composite_gauss([](double x) { return std::abs(x - 0.3); }, -1.0, 1.0, {});
  CHECK(kink == doctest::Approx(0.5 * (1.3 * 1.3 + 0.7 * 0.7)).epsilon(1e-9));
}

TEST_CASE("scale_mode") {
  const auto f = mode(ModeFamily::cosine_bump, 2.0, 1.0);
  const auto same = scale_mode(f, 1.0);
  for (double p : {-1.0, 0.4, 3.0}) {
    CHECK(std::abs(same.momentum(p) - f.momentum(p)) == 0.0);
  }
  for (double beta : {0.5, 4.0, 10.0}) {
    const auto s = scale_mode(f, beta);
    CHECK(momentum_norm(s) == doctest::Approx(momentum_norm(f)).epsilon(1e-8));
    CHECK(s.support().first > 0.0);
    // quarter_power: beta^{1/4} f(sqrt(beta) p)
    CHECK(std::abs(s.momentum(0.8) - std::pow(beta, 0.25) * f.momentum(std::sqrt(beta) * 0.8)) < 1e-14);
  }
  const auto lit = scale_mode(f, 4.0, ScalingConvention::paper_literal);
  CHECK(std::abs(lit.momentum(0.3) - 2.0 * f.momentum(1.2)) < 1e-14);
  // sqrt(beta) f(beta p) keeps the norm but rescales the kernel argument
  CHECK(momentum_norm(lit) == doctest::Approx(momentum_norm(f)).epsilon(1e-8));
}

TEST_CASE("continuum_mode_kernel") {
  SUBCASE("orthogonality is enforced") {
    CHECK_THROWS_AS(continuum_mode_kernel(mode(ModeFamily::gaussian, -2, 1), mode(ModeFamily::gaussian, 2, 1), 1.0),
                    PreconditionError);
  }
  SUBCASE("gaussian bumps against a trapezoid oracle") {
    const auto f = mode(ModeFamily::gaussian, -2.0, 0.3);
    const auto g = mode(ModeFamily::gaussian, 2.0, 0.3);
    for (double beta : {0.5, 1.0, 3.0}) {
      const auto k = continuum_mode_kernel(f, g, beta);
      const Complex coarse = gaussian_kernel_oracle(-2.0, 2.0, 0.3, beta, 40001);
      const Complex fine = gaussian_kernel_oracle(-2.0, 2.0, 0.3, beta, 160001);
      CHECK(std::abs(coarse - fine) < 1e-10);
      CHECK(std::abs(k.A(0, 1) - fine) < 1e-9);
      CHECK(std::abs(k.A(0, 0) - gaussian_kernel_oracle(-2.0, -2.0, 0.3, beta, 160001)) < 1e-9);
      CHECK(std::abs(k.A(1, 0) - std::conj(k.A(0, 1))) < 1e-14);
    }
  }
  SUBCASE("cross term decays with separation") {
    double prev = INFINITY;
    for (double s : {1.2, 2.0, 4.0, 8.0}) {
      const auto k = continuum_mode_kernel(mode(ModeFamily::cosine_bump, -s, 1.0), mode(ModeFamily::cosine_bump, s, 1.0), 1.0);
      CHECK(std::abs(k.A(0, 1)) < prev);
      prev = std::abs(k.A(0, 1));
    }
  }
}

TEST_CASE("scaling_invariance_check") {
  const auto f = mode(ModeFamily::exponential, -3.0, 0.2);
  const auto g = mode(ModeFamily::exponential, 3.0, 0.2);
  CHECK(scaling_invariance_check(f, g, {1.0}).passed);
  const auto rep = scaling_invariance_check(f, g, {0.5, 2.0, 10.0});
  CHECK(rep.passed);
  for (const auto& row : rep.rows) {
    CHECK(row.max_abs_diff <= 1e-6);
    CHECK(row.same_verdict);
  }

  ScalingOptions control;
  control.scale_partner = false;
  CHECK_FALSE(scaling_invariance_check(f, g, {0.5, 2.0, 10.0}, control).passed);

  ScalingOptions literal;
  literal.convention = ScalingConvention::paper_literal;
  CHECK_FALSE(scaling_invariance_check(f, g, {0.5, 2.0, 10.0}, literal).passed);
}
