#include "qlab/operator_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qlab/errors.hpp"

namespace qlab {

namespace {

constexpr double kHermTol = 1e-12;
constexpr double kProjTol = 1e-10;
constexpr double kUnitaryTol = 1e-10;
constexpr double kStateTol = 1e-12;

void require_square_finite(const Mat& a, const char* who) {
  if (a.rows() != a.cols())
    fail(Errc::dimension_mismatch, std::string(who) + ": matrix not square");
  if (!all_finite(a))
    fail(Errc::invalid_argument, std::string(who) + ": non-finite entries");
}

}  // namespace

void Observable::validate() const {
  require_square_finite(op, "Observable");
  if (hermiticity_defect(op) > kHermTol)
    fail(Errc::not_hermitian, "Observable operator is not Hermitian");
  const int n = dim();
  Mat sum = Mat::Zero(n, n);
  Mat recon = Mat::Zero(n, n);
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    const Mat& p = spectrum[i].projection;
    if (p.rows() != n || p.cols() != n)
      fail(Errc::dimension_mismatch, "projection dimension mismatch");
    if (hermiticity_defect(p) > kProjTol ||
        operator_norm(p * p - p) > kProjTol)
      fail(Errc::invalid_resolution, "projection is not a Hermitian idempotent");
    for (std::size_t j = i + 1; j < spectrum.size(); ++j) {
      if (operator_norm(p * spectrum[j].projection) > kProjTol)
        fail(Errc::invalid_resolution, "projections are not orthogonal");
      if (!(spectrum[i].eigenvalue > spectrum[j].eigenvalue))
        fail(Errc::invalid_resolution, "eigenvalues not strictly decreasing");
    }
    sum += p;
    recon += spectrum[i].eigenvalue * p;
  }
  if (operator_norm(sum - Mat::Identity(n, n)) > kProjTol)
    fail(Errc::invalid_resolution, "projections do not sum to the identity");
  if (operator_norm(recon - op) > kProjTol)
    fail(Errc::invalid_resolution, "spectral reconstruction failed");
}

Observable spectral_decompose(const Mat& op, double cluster_tol) {
  require_square_finite(op, "spectral_decompose");
  if (cluster_tol < 0.0)
    fail(Errc::invalid_argument, "cluster_tol must be non-negative");
  if (hermiticity_defect(op) > kHermTol)
    fail(Errc::not_hermitian, "spectral_decompose needs a Hermitian operator");

  Eigen::SelfAdjointEigenSolver<Mat> es(op);
  if (es.info() != Eigen::Success)
    fail(Errc::decomposition_failure, "eigensolver did not converge");

  const int n = static_cast<int>(op.rows());
  Observable out;
  out.op = op;

  // eigenvalues come sorted ascending; walk them and merge gaps <= tol
  int i = 0;
  while (i < n) {
    int j = i + 1;
    while (j < n && es.eigenvalues()(j) - es.eigenvalues()(j - 1) <= cluster_tol)
      ++j;
    Mat proj = Mat::Zero(n, n);
    double mean = 0.0;
    for (int k = i; k < j; ++k) {
      proj += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
      mean += es.eigenvalues()(k);
    }
    mean /= static_cast<double>(j - i);
    out.spectrum.push_back({mean, hermitian_part(proj)});
    i = j;
  }
  std::reverse(out.spectrum.begin(), out.spectrum.end());
  return out;
}

DensityState::DensityState(Mat rho) : rho_(std::move(rho)) {
  require_square_finite(rho_, "DensityState");
  if (hermiticity_defect(rho_) > kHermTol)
    fail(Errc::not_a_state, "density matrix is not Hermitian");
  if (std::abs(rho_.trace().real() - 1.0) > kStateTol ||
      std::abs(rho_.trace().imag()) > kStateTol)
    fail(Errc::not_a_state, "density matrix trace is not 1");
  Eigen::SelfAdjointEigenSolver<Mat> es(rho_, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    fail(Errc::decomposition_failure, "eigensolver failed on density matrix");
  if (es.eigenvalues().minCoeff() < -kStateTol)
    fail(Errc::not_a_state, "density matrix is not positive semidefinite");
}

DensityState DensityState::maximally_mixed(int dim) {
  if (dim <= 0) fail(Errc::invalid_argument, "dimension must be positive");
  return DensityState(Mat::Identity(dim, dim) / static_cast<double>(dim));
}

DensityState DensityState::pure(const Vec& psi) {
  double norm = psi.norm();
  if (norm <= 0.0) fail(Errc::invalid_argument, "zero vector");
  Vec unit = psi / norm;
  return DensityState(unit * unit.adjoint());
}

DensityState DensityState::diagonal(const std::vector<double>& weights) {
  Mat rho = Mat::Zero(weights.size(), weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) rho(i, i) = weights[i];
  return DensityState(std::move(rho));
}

Complex DensityState::expect(const Mat& a) const {
  if (a.rows() != rho_.rows() || a.cols() != rho_.cols())
    fail(Errc::dimension_mismatch, "expectation dimension mismatch");
  return (rho_ * a).trace();
}

double DensityState::expect_real(const Mat& a) const {
  return expect(a).real();
}

Evolution::Evolution(std::vector<double> grid, std::vector<Mat> cumulative)
    : grid_(std::move(grid)), cumulative_(std::move(cumulative)) {
  if (grid_.empty()) fail(Errc::empty_grid, "evolution grid is empty");
  for (std::size_t i = 1; i < grid_.size(); ++i)
    if (!(grid_[i] > grid_[i - 1]))
      fail(Errc::invalid_argument, "grid times must be strictly increasing");
  dim_ = static_cast<int>(cumulative_.front().rows());
  for (const Mat& v : cumulative_) {
    if (v.rows() != dim_ || v.cols() != dim_)
      fail(Errc::dimension_mismatch, "propagator dimension mismatch");
    if (unitarity_defect(v) > kUnitaryTol)
      fail(Errc::not_unitary, "propagator is not unitary");
  }
}

Evolution Evolution::identity(std::vector<double> grid, int dim) {
  std::vector<Mat> cum(grid.size(), Mat::Identity(dim, dim));
  return Evolution(std::move(grid), std::move(cum));
}

Evolution Evolution::from_generator(const Mat& h, std::vector<double> grid) {
  if (grid.empty()) fail(Errc::empty_grid, "evolution grid is empty");
  std::vector<Mat> cum;
  cum.reserve(grid.size());
  for (double t : grid) cum.push_back(unitary_exp(h, t - grid.front()));
  return Evolution(std::move(grid), std::move(cum));
}

Evolution Evolution::from_step_unitaries(std::vector<double> grid,
                                         const std::vector<Mat>& steps) {
  if (grid.empty()) fail(Errc::empty_grid, "evolution grid is empty");
  if (steps.empty())
    fail(Errc::invalid_argument, "no step unitaries; use identity() for a trivial grid");
  if (steps.size() + 1 != grid.size())
    fail(Errc::invalid_argument, "need one step unitary per grid interval");
  const int dim = static_cast<int>(steps.front().rows());
  std::vector<Mat> cum;
  cum.reserve(grid.size());
  cum.push_back(Mat::Identity(dim, dim));
  for (const Mat& s : steps) {
    if (unitarity_defect(s) > kUnitaryTol)
      fail(Errc::not_unitary, "step unitary fails the unitarity check");
    cum.push_back(s * cum.back());
  }
  return Evolution(std::move(grid), std::move(cum));
}

std::size_t Evolution::time_index(double t) const {
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    double scale = std::max({1.0, std::abs(t), std::abs(grid_[i])});
    if (std::abs(grid_[i] - t) <= 1e-12 * scale) return i;
  }
  fail(Errc::time_not_on_grid, "time " + std::to_string(t) + " not on grid");
}

bool Evolution::on_grid(double t) const {
  for (double g : grid_) {
    double scale = std::max({1.0, std::abs(t), std::abs(g)});
    if (std::abs(g - t) <= 1e-12 * scale) return true;
  }
  return false;
}

Mat Evolution::propagator(double t, double s) const {
  std::size_t it = time_index(t);
  std::size_t is = time_index(s);
  if (it < is)
    fail(Errc::invalid_argument, "propagator requires t >= s");
  return cumulative_[it] * cumulative_[is].adjoint();
}

const Mat& Evolution::from_start(double t) const {
  return cumulative_[time_index(t)];
}

Mat heisenberg(const Mat& a, const Evolution& evo, double t, double t0) {
  if (a.rows() != evo.dim() || a.cols() != evo.dim())
    fail(Errc::dimension_mismatch, "heisenberg dimension mismatch");
  std::size_t it = evo.time_index(t);
  std::size_t i0 = evo.time_index(t0);
  if (it < i0) fail(Errc::invalid_argument, "heisenberg requires t >= t0");
  // W = V(t0)^dagger V(t); conjugation by W composes exactly along the grid
  Mat w = evo.from_start(t0).adjoint() * evo.from_start(t);
  return w.adjoint() * a * w;
}

BlockAlgebra::BlockAlgebra(Mat basis_change, std::vector<int> block_sizes)
    : basis_change_(std::move(basis_change)),
      block_sizes_(std::move(block_sizes)) {
  require_square_finite(basis_change_, "BlockAlgebra");
  if (unitarity_defect(basis_change_) > kUnitaryTol)
    fail(Errc::not_unitary, "basis change is not unitary");
  int total = 0;
  for (int s : block_sizes_) {
    if (s <= 0) fail(Errc::invalid_argument, "block sizes must be positive");
    total += s;
  }
  if (total != dim())
    fail(Errc::invalid_argument, "blocks must partition all indices");
}

BlockAlgebra BlockAlgebra::full(int dim) {
  return BlockAlgebra(Mat::Identity(dim, dim), {dim});
}

std::vector<std::pair<int, int>> BlockAlgebra::block_ranges() const {
  std::vector<std::pair<int, int>> out;
  int begin = 0;
  for (int s : block_sizes_) {
    out.emplace_back(begin, begin + s);
    begin += s;
  }
  return out;
}

bool BlockAlgebra::refines(const BlockAlgebra& coarser) const {
  if (dim() != coarser.dim()) return false;
  auto fine = block_ranges();
  auto coarse = coarser.block_ranges();
  for (const auto& [b, e] : fine) {
    bool inside = false;
    for (const auto& [cb, ce] : coarse)
      if (cb <= b && e <= ce) {
        inside = true;
        break;
      }
    if (!inside) return false;
  }
  return true;
}

Mat pinch(const Mat& a, const BlockAlgebra& alg) {
  if (a.rows() != alg.dim() || a.cols() != alg.dim())
    fail(Errc::dimension_mismatch, "pinch dimension mismatch");
  if (alg.is_full() && alg.basis_change().isIdentity(1e-15)) return a;
  Mat rotated = alg.basis_change().adjoint() * a * alg.basis_change();
  Mat kept = Mat::Zero(a.rows(), a.cols());
  for (const auto& [b, e] : alg.block_ranges())
    kept.block(b, b, e - b, e - b) = rotated.block(b, b, e - b, e - b);
  return alg.basis_change() * kept * alg.basis_change().adjoint();
}

Filtration::Filtration(std::vector<std::pair<double, BlockAlgebra>> entries)
    : entries_(std::move(entries)) {
  if (entries_.empty()) fail(Errc::empty_grid, "filtration has no entries");
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (!(entries_[i].first > entries_[i - 1].first))
      fail(Errc::invalid_argument, "filtration times must increase");
    Mat qdiff = entries_[i].second.basis_change() -
                entries_.front().second.basis_change();
    if (qdiff.cwiseAbs().maxCoeff() > 1e-12)
      fail(Errc::invalid_argument, "filtration entries must share one basis");
    if (!entries_[i].second.refines(entries_[i - 1].second))
      fail(Errc::invalid_argument,
           "later partitions must refine earlier ones");
  }
}

const BlockAlgebra& Filtration::at_time(double t) const {
  const BlockAlgebra* best = &entries_.front().second;
  for (const auto& [time, alg] : entries_) {
    if (time <= t) best = &alg;
  }
  return *best;
}

}  // namespace qlab
