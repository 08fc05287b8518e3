#pragma once

#include "thermosep/linalg.hpp"
#include "thermosep/separability.hpp"

#include <optional>
#include <vector>

namespace thermosep {

enum class Statistics { fermi, bose };

/// Hermitian one-particle matrix V(x - y).
struct OneParticleHamiltonian {
  CMatrix V;
};

/// omega(a_i^+ a_j) = A(j, i), omega(a_j a_i) = B(i, j).
struct QuasifreeSymbol {
  CMatrix A;
  CMatrix B;
  Statistics statistics = Statistics::fermi;

  int modes() const { return static_cast<int>(A.rows()); }
  /// Gamma(k, l) = omega(alpha_l^+ alpha_k) with alpha = (a_1..a_n, a_1^+..a_n^+):
  /// [[A, B], [B^+, 1 -+ conj(A)]].
  CMatrix generalized_density() const;
  static QuasifreeSymbol from_generalized_density(const CMatrix& gamma, Statistics statistics);
  /// Throws PreconditionError when the CAR/CCR positivity constraint fails.
  void validate(double tol = 1e-10) const;
};

struct RegionProjection {
  std::vector<int> s1;
  std::vector<int> s2;

  void validate(int n) const;
};

OneParticleHamiltonian hopping_chain(int n, double t, double onsite, bool periodic);

/// A = (1 + e^{beta V})^{-1}
QuasifreeSymbol fermi_symbol(const OneParticleHamiltonian& h, double beta);
/// A = (e^{beta V + mu} - 1)^{-1}
QuasifreeSymbol bose_symbol(const OneParticleHamiltonian& h, double beta, double mu);

/// M_fg = [[A11, A12], [A12^+, 1 -+ A22]], M_gf = [[A22, A21], [A21^+, 1 -+ A11]].
struct PtBlocks {
  CMatrix m_fg;
  CMatrix m_gf;
};

PtBlocks fermion_pt_blocks(const QuasifreeSymbol& sym, const RegionProjection& regions);
PtBlocks boson_pt_blocks(const QuasifreeSymbol& sym, const RegionProjection& regions);

/// Generalized density on S1 u S2 after transposing the region-2 factor:
/// cross-region entries take the other creation/annihilation slot of the
/// region-2 index, the region-2 block is complex conjugated.
CMatrix pt_generalized_density(const QuasifreeSymbol& sym, const RegionProjection& regions);

/// Smallest eigenvalue of the partial transpose of the many-body state on
/// S1 u S2 (Jordan-Wigner order S1 then S2). At most kMaxManyBodyModes modes.
inline constexpr int kMaxManyBodyModes = 10;
double fermion_many_body_pt_min_eig(const QuasifreeSymbol& sym, const RegionProjection& regions);

/// B = 0 uses the two corner blocks; B != 0 uses the many-body partial
/// transpose for fermions and the transposed generalized density for bosons.
Verdict fermion_pt_test(const QuasifreeSymbol& sym, const RegionProjection& regions, double tol = kPptTolerance);
Verdict boson_pt_test(const QuasifreeSymbol& sym, const RegionProjection& regions, double tol = kPptTolerance);

/// beta = T alpha on the doubled mode space; Gamma' = T Gamma T^+.
struct BogoliubovTransform {
  CMatrix T;
  Statistics statistics = Statistics::fermi;

  static BogoliubovTransform identity(int n, Statistics statistics);
  /// Fermi: b_i = cos a_i - sin a_j^+, b_j = cos a_j + sin a_i^+.
  static BogoliubovTransform fermi_pair_rotation(int n, int i, int j, double theta);
  /// Bose: b_i = cosh a_i + sinh a_j^+, b_j = cosh a_j + sinh a_i^+.
  static BogoliubovTransform bose_two_mode_squeeze(int n, int i, int j, double r);
  /// Fermi: b_i = a_i^+.
  static BogoliubovTransform particle_hole(int n, int i);

  BogoliubovTransform then(const BogoliubovTransform& next) const;
  BogoliubovTransform inverse() const;
  /// Max entry of T T^+ - 1 (fermi) or T J T^+ - J (bose), also including the
  /// departure from the [[U, V], [conj V, conj U]] form.
  double structure_defect() const;
};

struct PairAngle {
  int i = 0;
  int j = 1;
  double theta = 0.0;
};

QuasifreeSymbol bogoliubov_rotate(const QuasifreeSymbol& sym, const BogoliubovTransform& t);
/// Product of pair rotations (fermi) or two-mode squeezes (bose), applied in order.
QuasifreeSymbol bogoliubov_rotate(const QuasifreeSymbol& sym, const std::vector<PairAngle>& angles);

struct QuasifreeScanRow {
  double beta = 0.0;
  double min_block_eig = 0.0;
  Verdict verdict;
};

struct QuasifreeScan {
  std::vector<QuasifreeScanRow> rows;
  std::optional<double> threshold;
};

QuasifreeScan quasifree_beta_scan(const OneParticleHamiltonian& h, const RegionProjection& regions,
                                  const std::vector<double>& betas, double tol = kPptTolerance,
                                  double tol_beta = 1e-4);

} // namespace thermosep
