#include "thermosep/gibbs_thermal.hpp"

#include "thermosep/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace thermosep {

namespace {

void require_hermitian(const Operator& h) {
  h.validate();
  if (!is_hermitian(h.matrix)) {
    throw PreconditionError("Hamiltonian is not Hermitian (defect " +
                            describe(hermiticity_defect(h.matrix)) + ")");
  }
}

DensityMatrix gibbs_from_spectrum(const HermitianEigen& eig, const std::vector<int>& dims, double beta) {
  if (!std::isfinite(beta) || beta < 0.0) {
    throw PreconditionError("beta must be finite and nonnegative");
  }
  const double e0 = eig.values.minCoeff();
  RVector w = (-(beta) * (eig.values.array() - e0)).exp().matrix();
  w /= w.sum();
  CMatrix rho = eig.vectors * w.asDiagonal() * eig.vectors.adjoint();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  if (beta == 0.0) {
    const int d = static_cast<int>(rho.rows());
    rho = CMatrix::Identity(d, d) / static_cast<double>(d);
  }
  return {rho, dims};
}

} // namespace

void DensityMatrix::validate() const {
  if (matrix.rows() != matrix.cols() || product(subsystem_dims) != matrix.rows()) {
    throw NumericalError("density matrix dimension does not match subsystem dims");
  }
  if (!is_hermitian(matrix)) {
    throw NumericalError("density matrix is not Hermitian");
  }
  const Complex tr = matrix.trace();
  if (std::abs(tr - 1.0) > 1e-12 * std::max(1.0, static_cast<double>(matrix.rows()) / 64.0)) {
    throw NumericalError("density matrix trace differs from 1");
  }
  if (min_eigenvalue(matrix) < -1e-10) {
    throw NumericalError("density matrix has a negative eigenvalue");
  }
}

void RegionPair::validate(int n_sites) const {
  if (region1.empty() || region2.empty()) {
    throw PreconditionError("regions must be nonempty");
  }
  std::set<int> seen;
  for (const auto* region : {&region1, &region2}) {
    for (int s : *region) {
      if (s < 0 || s >= n_sites) {
        throw PreconditionError("site " + std::to_string(s) + " out of range");
      }
      if (!seen.insert(s).second) {
        throw PreconditionError("regions overlap or repeat site " + std::to_string(s));
      }
    }
  }
}

DensityMatrix gibbs_state(const Operator& h, double beta) {
  require_hermitian(h);
  return gibbs_from_spectrum(hermitian_eig(h.matrix), h.subsystem_dims, beta);
}

ThermalFamily::ThermalFamily(const Operator& h) {
  require_hermitian(h);
  eig_ = hermitian_eig(h.matrix);
  dims_ = h.subsystem_dims;
}

DensityMatrix ThermalFamily::at(double beta) const { return gibbs_from_spectrum(eig_, dims_, beta); }

Operator evolve_complex_time(const Operator& h, const Operator& a, Complex z) {
  require_hermitian(h);
  a.validate();
  if (a.dim() != h.dim()) {
    throw PreconditionError("operator and Hamiltonian dimensions differ");
  }
  const auto eig = hermitian_eig(h.matrix);
  CMatrix at = eig.vectors.adjoint() * a.matrix * eig.vectors;
  const auto n = at.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) {
      at(k, l) *= std::exp(kI * z * (eig.values(k) - eig.values(l)));
    }
  }
  return {eig.vectors * at * eig.vectors.adjoint(), a.subsystem_dims};
}

double kms_defect(const Operator& h, double beta, const CMatrix& a, const CMatrix& b) {
  require_hermitian(h);
  if (a.rows() != h.dim() || b.rows() != h.dim()) {
    throw PreconditionError("observable dimension differs from the Hamiltonian");
  }
  const auto eig = hermitian_eig(h.matrix);
  const double e0 = eig.values.minCoeff();
  double z = 0.0;
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
    z += std::exp(-beta * (eig.values(k) - e0));
  }
  // log Gibbs weights
  auto log_p = [&](Eigen::Index k) { return -beta * (eig.values(k) - e0) - std::log(z); };

  const CMatrix ae = eig.vectors.adjoint() * a * eig.vectors;
  const CMatrix be = eig.vectors.adjoint() * b * eig.vectors;
  const CMatrix ab = ae * be;
  Complex lhs = 0.0;
  Complex rhs = 0.0;
  for (Eigen::Index m = 0; m < ae.rows(); ++m) {
    lhs += std::exp(log_p(m)) * ab(m, m);
    for (Eigen::Index n = 0; n < ae.cols(); ++n) {
      // (rho B alpha_{i beta}(A))_{mm} term: p_m B_mn e^{-beta (E_n - E_m)} A_nm
      rhs += std::exp(log_p(m) + beta * (eig.values(m) - eig.values(n))) * be(m, n) * ae(n, m);
    }
  }
  return std::abs(lhs - rhs);
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep) {
  const auto& dims = rho.subsystem_dims;
  const int n = static_cast<int>(dims.size());
  if (product(dims) != rho.dim()) {
    throw PreconditionError("density matrix dimension does not match subsystem dims");
  }
  std::vector<bool> kept(n, false);
  std::vector<int> keep_dims;
  for (int s : keep) {
    if (s < 0 || s >= n || kept[s]) {
      throw PreconditionError("invalid or repeated site " + std::to_string(s) + " in partial trace");
    }
    kept[s] = true;
    keep_dims.push_back(dims[s]);
  }
  std::vector<int> rest;
  for (int s = 0; s < n; ++s) {
    if (!kept[s]) {
      rest.push_back(s);
    }
  }

  std::vector<long> stride(n, 1);
  for (int k = n - 2; k >= 0; --k) {
    stride[k] = stride[k + 1] * dims[k + 1];
  }
  const long full = rho.dim();
  const int r = product(keep_dims);
  const long rest_dim = full / r;

  // index[rest_index * r + keep_index] = full index
  std::vector<long> index(full);
  for (long i = 0; i < full; ++i) {
    long ki = 0;
    for (int s : keep) {
      ki = ki * dims[s] + (i / stride[s]) % dims[s];
    }
    long ri = 0;
    for (int s : rest) {
      ri = ri * dims[s] + (i / stride[s]) % dims[s];
    }
    index[ri * r + ki] = i;
  }

  CMatrix out = CMatrix::Zero(r, r);
  for (long ri = 0; ri < rest_dim; ++ri) {
    const long* row = &index[ri * r];
    for (int a = 0; a < r; ++a) {
      for (int b = 0; b < r; ++b) {
        out(a, b) += rho.matrix(row[a], row[b]);
      }
    }
  }
  return {out, keep_dims};
}

DensityMatrix restrict_to_pair(const DensityMatrix& rho, const RegionPair& pair) {
  pair.validate(static_cast<int>(rho.subsystem_dims.size()));
  std::vector<int> keep = pair.region1;
  keep.insert(keep.end(), pair.region2.begin(), pair.region2.end());
  auto reduced = partial_trace(rho, keep);
  int d1 = 1;
  for (int s : pair.region1) {
    d1 *= rho.subsystem_dims[s];
  }
  reduced.subsystem_dims = {d1, reduced.dim() / d1};
  return reduced;
}

DensityMatrix product_state(const std::vector<DensityMatrix>& factors) {
  CMatrix m = CMatrix::Identity(1, 1);
  std::vector<int> dims;
  for (const auto& f : factors) {
    m = kron(m, f.matrix);
    dims.insert(dims.end(), f.subsystem_dims.begin(), f.subsystem_dims.end());
  }
  return {m, dims};
}

DensityMatrix translation_average(const std::vector<DensityMatrix>& site_states, int n_sites) {
  const int k = static_cast<int>(site_states.size());
  if (k == 0 || n_sites < 1 || n_sites % k != 0) {
    throw PreconditionError("period " + std::to_string(k) + " does not divide " + std::to_string(n_sites));
  }
  for (const auto& s : site_states) {
    if (s.subsystem_dims.size() != 1 || s.subsystem_dims[0] != site_states[0].subsystem_dims[0]) {
      throw PreconditionError("translation_average needs single-site states of equal dimension");
    }
  }
  std::vector<DensityMatrix> factors;
  for (int j = 0; j < n_sites; ++j) {
    factors.push_back(site_states[j % k]);
  }
  const auto base = product_state(factors);
  Operator op{base.matrix, base.subsystem_dims};
  CMatrix sum = CMatrix::Zero(base.dim(), base.dim());
  for (int l = 0; l < k; ++l) {
    sum += translate_operator(op, l).matrix;
  }
  return {sum / static_cast<double>(k), base.subsystem_dims};
}

} // namespace thermosep
