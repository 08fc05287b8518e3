#pragma once

#include "thermosep/linalg.hpp"

#include <string>
#include <vector>

namespace thermosep {

enum class ModeFamily { gaussian, cosine_bump, exponential };

ModeFamily mode_family_from_name(const std::string& name);
std::string to_string(ModeFamily family);

/// Unit-norm mode profile. Base profiles in position space:
///   gaussian     (2 pi w^2)^{-1/4} exp(-(x - x0)^2 / (4 w^2))
///   cosine_bump  w^{-1/2} cos(pi (x - x0) / (2 w)) on |x - x0| <= w
///   exponential  sqrt(1/w) exp(-|x - x0| / w)
/// The momentum profile is amplitude * base_hat(momentum_scale * p), with
/// hat f(p) = (2 pi)^{-1/2} int f(x) e^{-ipx} dx.
struct ModeFunction {
  ModeFamily family = ModeFamily::gaussian;
  double center = 0.0;
  double width = 1.0;
  double amplitude = 1.0;
  double momentum_scale = 1.0;

  Complex momentum(double p) const;
  double position(double x) const;
  /// Interval outside which the position profile is below ~1e-20.
  std::pair<double, double> support() const;
  /// Points where the position profile is not smooth.
  std::vector<double> kinks() const;
};

enum class ScalingConvention {
  /// beta^{1/4} f(sqrt(beta) p): exact change of variables for 1/(1 + e^{beta p^2})
  quarter_power,
  /// sqrt(beta) f(beta p)
  paper_literal,
};

ModeFunction scale_mode(const ModeFunction& f, double beta,
                        ScalingConvention convention = ScalingConvention::quarter_power);

struct QuadratureConfig {
  double tail = 1e-12;
  int initial_panels = 8;
  int max_panels = 8192;
  double tol = 1e-10;
};

/// Integral of g over [a, b] by composite 20-point Gauss-Legendre, doubling
/// the panel count until two successive results agree to `tol`.
double composite_gauss(const std::function<double(double)>& g, double a, double b, const QuadratureConfig& q,
                       int* panels_used = nullptr);

/// <f|g> in position space.
double position_overlap(const ModeFunction& f, const ModeFunction& g, double tol = 1e-12);

struct ModeKernel {
  /// A(r, c) = int conj(u_r(p)) u_c(p) / (1 + e^{beta p^2}) dp, u = (f, g)
  CMatrix A;
  double overlap = 0.0;
  int panels = 0;
};

/// Requires |<f|g>| <= 1e-8.
ModeKernel continuum_mode_kernel(const ModeFunction& f, const ModeFunction& g, double beta,
                                 const QuadratureConfig& q = {});

struct ScalingRow {
  double beta = 0.0;
  double max_abs_diff = 0.0;
  bool agree = false;
  bool same_verdict = false;
};

struct ScalingReport {
  CMatrix reference;
  std::vector<ScalingRow> rows;
  bool passed = false;
};

struct ScalingOptions {
  double tol = 1e-6;
  ScalingConvention convention = ScalingConvention::quarter_power;
  /// Negative control: leave g unscaled.
  bool scale_partner = true;
  QuadratureConfig quadrature;
};

ScalingReport scaling_invariance_check(const ModeFunction& f, const ModeFunction& g, const std::vector<double>& betas,
                                       const ScalingOptions& options = {});

} // namespace thermosep
