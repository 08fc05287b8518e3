#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <vector>

namespace thermosep {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// max_ij |M_ij - conj(M_ji)|
double hermiticity_defect(const CMatrix& m);

/// Hermitian up to `tol` relative to the largest entry (absolute when the
/// matrix is small).
bool is_hermitian(const CMatrix& m, double tol = 1e-12);

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
struct HermitianEigen {
  RVector values;
  CMatrix vectors;
};

HermitianEigen hermitian_eig(const CMatrix& m);

/// Only the lower triangle is read; callers are expected to pass Hermitian input.
RVector hermitian_eigenvalues(const CMatrix& m);
double min_eigenvalue(const CMatrix& m);

/// V f(Λ) V†
CMatrix apply_spectral(const HermitianEigen& eig, const std::function<double(double)>& f);

CMatrix kron(const CMatrix& a, const CMatrix& b);

/// Product of the entries of `dims` as a matrix dimension.
int product(const std::vector<int>& dims);

} // namespace thermosep
