#pragma once

#include "thermosep/linalg.hpp"
#include "thermosep/spin_operators.hpp"

#include <span>
#include <vector>

namespace thermosep {

struct DensityMatrix {
  CMatrix matrix;
  std::vector<int> subsystem_dims;

  int dim() const { return static_cast<int>(matrix.rows()); }
  /// Throws NumericalError if the matrix is not Hermitian, not unit trace or
  /// has an eigenvalue below -1e-10.
  void validate() const;
};

struct RegionPair {
  std::vector<int> region1;
  std::vector<int> region2;

  void validate(int n_sites) const;
  bool operator==(const RegionPair&) const = default;
};

DensityMatrix gibbs_state(const Operator& h, double beta);

/// Gibbs states of one Hamiltonian at many temperatures; the
/// eigendecomposition is computed once.
class ThermalFamily {
public:
  explicit ThermalFamily(const Operator& h);

  DensityMatrix at(double beta) const;
  const HermitianEigen& spectrum() const { return eig_; }
  const std::vector<int>& dims() const { return dims_; }

private:
  HermitianEigen eig_;
  std::vector<int> dims_;
};

/// e^{izH} A e^{-izH}
Operator evolve_complex_time(const Operator& h, const Operator& a, Complex z);

/// |tr(rho A B) - tr(rho B alpha_{i beta}(A))| with rho the Gibbs state.
/// Both traces are taken in the eigenbasis of H so that large beta does not
/// amplify rounding through e^{beta H}.
double kms_defect(const Operator& h, double beta, const CMatrix& a, const CMatrix& b);

/// Keeps `keep` in the listed order.
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep);

/// Bipartite state on (region1, region2) with dims (prod d over region1,
/// prod d over region2).
DensityMatrix restrict_to_pair(const DensityMatrix& rho, const RegionPair& pair);

/// (1/k) sum_l tau^l (rho_0 x rho_1 x ... ) for a period-k product pattern
/// repeated over n_sites.
DensityMatrix translation_average(const std::vector<DensityMatrix>& site_states, int n_sites);

DensityMatrix product_state(const std::vector<DensityMatrix>& factors);

} // namespace thermosep
