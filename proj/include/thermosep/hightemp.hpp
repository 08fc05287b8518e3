#pragma once

#include "thermosep/separability.hpp"
#include "thermosep/spin_operators.hpp"

#include <optional>
#include <string>
#include <vector>

namespace thermosep {

/// 1 / (d + 1)
double k_norm(int d);

/// (d + 1)^2 2 beta h / (1 - 2 beta h), defined for 2 beta h < 1.
double l_bound(double beta, double h_norm, int d);

/// Solves k_norm(d) + l_bound(beta, h, d) = 1 for beta.
double series_beta_max(int d, double h_norm);

/// Sum over terms of |coefficient| times the product of factor operator
/// norms. Mean-field terms are rejected.
double interaction_norm_surrogate(const ModelSpec& model);

struct BoundScan {
  int max_region_size = 2;
  double beta_lo = 0.0;
  double beta_hi = 10.0;
  ThresholdOptions threshold;
  int l_curve_points = 16;
  /// Replaces the computed surrogate (used to build inconsistent fixtures).
  std::optional<double> h_norm_override;
};

struct BoundReport {
  int d = 2;
  double h_norm = 0.0;
  double k_norm = 0.0;
  std::vector<std::pair<double, double>> l_curve;
  double beta_star_analytic = 0.0;
  std::optional<double> beta_star_numeric;
  bool consistent = true;
  int pairs_checked = 0;
  std::string note;
};

BoundReport bound_vs_numeric(const ModelSpec& model, const BoundScan& scan = {});

} // namespace thermosep
