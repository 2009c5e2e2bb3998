#pragma once

#include <Eigen/Dense>
#include <complex>

namespace qlab {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat dagger(const Mat& a) { return a.adjoint(); }

bool all_finite(const Mat& a);

// max entrywise |a - a^dagger|
double hermiticity_defect(const Mat& a);

inline bool is_hermitian(const Mat& a, double tol = 1e-12) {
  return a.rows() == a.cols() && hermiticity_defect(a) <= tol;
}

// operator norm of u^dagger u - 1
double unitarity_defect(const Mat& u);

// largest singular value
double operator_norm(const Mat& a);

// sum of singular values (dual of the operator norm)
double trace_norm(const Mat& a);

inline Mat commutator(const Mat& a, const Mat& b) { return a * b - b * a; }

inline Mat hermitian_part(const Mat& a) { return 0.5 * (a + a.adjoint()); }

// exp(-i * scale * h) for Hermitian h, via spectral calculus
Mat unitary_exp(const Mat& h, double scale);

// Hermitian PSD square root; negative roundoff eigenvalues are clamped to 0
Mat psd_sqrt(const Mat& a);

}  // namespace qlab
