#pragma once

// Shared helpers for the test suites. The numeric helpers here are written
// directly against Eigen, independent of the library code paths they are
// used to check.

#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace testutil {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// deterministic Gaussian sampler (independent of qlab::Rng)
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double gauss() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }
  int integer(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }

 private:
  std::mt19937_64 engine_;
};

inline Mat ginibre(Gen& g, int dim) {
  Mat m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = Complex(g.gauss(), g.gauss());
  return m;
}

inline Mat hermitian(Gen& g, int dim) {
  Mat m = ginibre(g, dim);
  return 0.5 * (m + m.adjoint());
}

inline Mat unitary(Gen& g, int dim) {
  Eigen::HouseholderQR<Mat> qr(ginibre(g, dim));
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < dim; ++i) {
    Complex d = r(i, i);
    q.col(i) *= (std::abs(d) > 0.0) ? d / std::abs(d) : Complex(1.0, 0.0);
  }
  return q;
}

inline Mat density(Gen& g, int dim, bool full_rank = true) {
  Mat m = ginibre(g, dim);
  Mat rho = m * m.adjoint();
  if (full_rank) rho += 0.1 * Mat::Identity(dim, dim);
  rho /= rho.trace().real();
  return 0.5 * (rho + rho.adjoint());
}

// Kronecker product, used by the tensor-product oracles
inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline double opnorm(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

// polarization direction and filter projection at angle theta
inline Vec polar_vector(double theta) {
  Vec v(2);
  v << std::cos(theta), std::sin(theta);
  return v;
}

inline Mat polar_projection(double theta) {
  Vec v = polar_vector(theta);
  return v * v.adjoint();
}

inline Mat pauli_x() {
  Mat m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

inline Mat pauli_y() {
  Mat m(2, 2);
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}

inline Mat pauli_z() {
  Mat m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

}  // namespace testutil
