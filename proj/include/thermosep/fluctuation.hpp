#pragma once

#include "thermosep/linalg.hpp"
#include "thermosep/separability.hpp"

#include <optional>
#include <string>
#include <vector>

namespace thermosep {

/// Fluctuation coordinates are ordered R = (S_rx, S_ry, S_lx, S_ly).
enum FluctuationIndex { kRx = 0, kRy = 1, kLx = 2, kLy = 3 };

struct MeanFieldParams {
  double c = 1.0;
  double beta = 1.0;
  double lambda = 2.0;
  double alpha = 0.5;
};

struct SelfConsistentResult {
  double s_z = 0.0;
  double a_eff = 0.0;
  bool multiple_roots = false;
  int iterations = 0;
};

/// Root of s = -tanh(beta (c + lambda s)) on [-1, 1]. beta may be +inf, in
/// which case s = -clamp(c / lambda, -1, 1) for lambda > 0 and -sign(c)
/// otherwise.
SelfConsistentResult selfconsistent_sz(double c, double beta, double lambda, double tol = 1e-13,
                                       int max_iter = 200);

struct FactorizationReport {
  std::vector<int> sizes;
  /// max over a in {x, y, z} of |w(s_a^0 s_a^1) - w(s_a^0) w(s_a^1)|
  std::vector<double> connected;
  std::vector<double> s_z;
  bool decreasing = false;
};

/// Exact Gibbs states of sum_k c sz^k + (coupling/N) sum_{k != l} s^k . s^l.
FactorizationReport factorized_state_check(double c, double beta, double coupling = 1.0,
                                           const std::vector<int>& sizes = {2, 3, 4, 5, 6, 7, 8});

struct FluctuationAlgebra {
  double s_z = 0.0;
  double alpha = 0.5;
  /// [R_i, R_j] = i sigma(i, j)
  RMatrix symplectic_form;
  bool near_degenerate = false;
};

FluctuationAlgebra build_fluctuation_algebra(double s_z, double alpha);

enum class GeneratorForm { symmetric, paper_literal };

/// dR/dt = G R
RMatrix linearized_generator(double c, double s_z, double alpha, GeneratorForm form = GeneratorForm::symmetric);

struct NormalModes {
  /// |nu| of each mode, H = nu (x^2 + p^2)
  double nu1 = 0.0;
  double nu2 = 0.0;
  /// sign of the mode energy before the p -> -p flip that makes it positive
  int orientation1 = 1;
  int orientation2 = 1;
  /// x = a1 S_rx + b1 S_lx, y = a2 S_rx + b2 S_lx
  double a1 = 0.0, b1 = 0.0, a2 = 0.0, b2 = 0.0;
  /// (x, p, y, q) = L R
  RMatrix L;
};

/// Throws NumericalError for non-oscillatory or non-symplectic generators.
NormalModes normal_modes(const RMatrix& g, const FluctuationAlgebra& algebra);

/// G rebuilt from the mode data.
RMatrix reconstruct_generator(const NormalModes& modes);

struct GaussianState {
  RVector mean = RVector::Zero(4);
  RMatrix covariance = RMatrix::Zero(4, 4);
};

/// beta = +inf gives the ground state. Throws PreconditionError for a
/// frequency below 1e-12.
GaussianState gaussian_kms_state(const NormalModes& modes, double beta);

/// min eigenvalue of covariance + (i/2) sigma
double uncertainty_defect(const GaussianState& state, const FluctuationAlgebra& algebra);

struct UncertaintyResult {
  double right_margin = 0.0;
  double left_margin = 0.0;
  bool holds = false;
};

UncertaintyResult uncertainty_check(const GaussianState& state, const FluctuationAlgebra& algebra);

enum class Ineq23Variant { corrected, paper_literal };

struct Ineq23Result {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

/// corrected: <(S_lx + S_rx)^2> + <(S_ly - S_ry)^2> >= |s_z|
/// paper_literal: <(S_lx + S_rx)^2> + <(S_ly - S_lx)^2> >= |s_z|
Ineq23Result inequality_23(const GaussianState& state, double s_z, Ineq23Variant variant);

/// Flips S_ly and tests the uncertainty relation of the result.
Verdict gaussian_ppt(const GaussianState& state, const FluctuationAlgebra& algebra, double tol = kPptTolerance);

struct FluctuationRow {
  double c = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double s_z = 0.0;
  double a_eff = 0.0;
  bool multiple_roots = false;
  double nu1 = 0.0, nu2 = 0.0;
  int orientation1 = 0, orientation2 = 0;
  double a1 = 0.0, b1 = 0.0, a2 = 0.0, b2 = 0.0;
  double orthogonality = 0.0;
  double state_defect = 0.0;
  bool uncertainty_ok = false;
  Ineq23Result ineq_corrected;
  Ineq23Result ineq_literal;
  double ppt_min_eig = 0.0;
  Verdict verdict;
  /// set when the point could not be evaluated; the numeric fields are then meaningless
  std::string error;
};

struct SweepOptions {
  GeneratorForm form = GeneratorForm::symmetric;
  double sz_tol = 1e-13;
};

FluctuationRow fluctuation_point(const MeanFieldParams& p, const SweepOptions& options = {});

/// Rows in (alpha, beta) grid order; per-point errors are recorded in the row.
std::vector<FluctuationRow> alpha_beta_sweep(double c, double lambda, const std::vector<double>& alphas,
                                             const std::vector<double>& betas, const SweepOptions& options = {});

} // namespace thermosep
