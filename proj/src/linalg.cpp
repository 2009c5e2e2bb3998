#include "qlab/linalg.hpp"

#include <Eigen/SVD>

#include "qlab/errors.hpp"

namespace qlab {

bool all_finite(const Mat& a) {
  return a.allFinite();
}

double hermiticity_defect(const Mat& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

double unitarity_defect(const Mat& u) {
  if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
  Mat d = u.adjoint() * u - Mat::Identity(u.rows(), u.cols());
  return operator_norm(d);
}

double operator_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

double trace_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues().sum();
}

Mat unitary_exp(const Mat& h, double scale) {
  if (!is_hermitian(h, 1e-12))
    fail(Errc::not_hermitian, "unitary_exp needs a Hermitian generator");
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  if (es.info() != Eigen::Success)
    fail(Errc::decomposition_failure, "eigensolver failed in unitary_exp");
  Vec phases(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    phases(i) = std::exp(Complex(0.0, -scale * es.eigenvalues()(i)));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Mat psd_sqrt(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(a));
  if (es.info() != Eigen::Success)
    fail(Errc::decomposition_failure, "eigensolver failed in psd_sqrt");
  Eigen::VectorXd vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * vals.asDiagonal().toDenseMatrix().cast<Complex>() *
         es.eigenvectors().adjoint();
}

}  // namespace qlab
