#include "thermosep/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace thermosep {

double hermiticity_defect(const CMatrix& m) {
  if (m.rows() != m.cols()) {
    return std::numeric_limits<double>::infinity();
  }
  if (m.size() == 0) {
    return 0.0;
  }
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const CMatrix& m, double tol) {
  if (m.rows() != m.cols()) {
    return false;
  }
  if (m.size() == 0) {
    return true;
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return hermiticity_defect(m) <= tol * scale;
}

HermitianEigen hermitian_eig(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m);
  return {solver.eigenvalues(), solver.eigenvectors()};
}

RVector hermitian_eigenvalues(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

double min_eigenvalue(const CMatrix& m) {
  return hermitian_eigenvalues(m).minCoeff();
}

CMatrix apply_spectral(const HermitianEigen& eig, const std::function<double(double)>& f) {
  RVector fv = eig.values.unaryExpr(f);
  return eig.vectors * fv.asDiagonal() * eig.vectors.adjoint();
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

int product(const std::vector<int>& dims) {
  int p = 1;
  for (int d : dims) {
    p *= d;
  }
  return p;
}

} // namespace thermosep
