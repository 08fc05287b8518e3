#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>

namespace oracle {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;

Mat pauli(char which);
Mat kron(const Mat& a, const Mat& b);
Mat kron_all(std::initializer_list<Mat> factors);

/// exp(-beta H) / Z through the Pade exponential, no eigendecomposition.
Mat gibbs_pade(const Mat& h, double beta);

/// Partial transpose on B by explicit index loops.
Mat transpose_b(const Mat& rho, int da, int db);
double min_eig(const Mat& m);

Mat bell_phi_plus();
Mat werner(double p);

/// Hermitian matrix with Gaussian entries, scaled to operator norm 1.
Mat random_hermitian(int d, std::mt19937_64& rng);
Mat random_matrix(int d, std::mt19937_64& rng);

/// Two fermionic modes on C^2 x C^2 by Jordan-Wigner: c1 = a x 1, c2 = Z x a.
struct TwoModeFock {
  Mat c1;
  Mat c2;
};
TwoModeFock two_mode_fock();

/// Many-body Gibbs state of sum_ij V_ij c_i^+ c_j on the 4-dim Fock space.
Mat fock_gibbs(const Eigen::Matrix2cd& v, double beta);

/// Smallest eigenvalue of the mode-2 partial transpose of fock_gibbs.
double fock_pt_min_eig(const Eigen::Matrix2cd& v, double beta);

/// 2-site sigma.sigma: rho = (e^{-beta} P_triplet + e^{3 beta} P_singlet) / Z
/// is NPT iff the singlet weight exceeds 1/2.
double heisenberg_pair_threshold();

} // namespace oracle
