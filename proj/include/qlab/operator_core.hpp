#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qlab/linalg.hpp"

namespace qlab {

// Hermitian operator together with its spectral resolution. `spectrum` holds
// (eigenvalue, eigenprojection) pairs with strictly decreasing eigenvalues
// after degeneracy clustering; the projections are mutually orthogonal and
// complete, and sum(eigenvalue * projection) reconstructs `op`.
struct Observable {
  struct Line {
    double eigenvalue;
    Mat projection;
  };

  Mat op;
  std::vector<Line> spectrum;

  int dim() const { return static_cast<int>(op.rows()); }
  std::size_t outcomes() const { return spectrum.size(); }

  // throws if any structural invariant is violated
  void validate() const;
};

// Spectral decomposition with degeneracy clustering: eigenvalues closer than
// cluster_tol are merged into a single eigenprojection.
Observable spectral_decompose(const Mat& op, double cluster_tol = 1e-8);

// Positive unit-trace operator rho realizing omega(a) = trace(rho a).
class DensityState {
 public:
  explicit DensityState(Mat rho);

  static DensityState maximally_mixed(int dim);
  static DensityState pure(const Vec& psi);
  static DensityState diagonal(const std::vector<double>& weights);

  const Mat& rho() const { return rho_; }
  int dim() const { return static_cast<int>(rho_.rows()); }

  Complex expect(const Mat& a) const;
  double expect_real(const Mat& a) const;

 private:
  Mat rho_;
};

// Two-parameter family of propagators over a finite time grid. Internally
// stores V(t) = U(t, t_first); propagator(t, s) = V(t) V(s)^dagger satisfies
// the exact composition law U(t,s) U(s,u) = U(t,u) and U(t,t) = 1.
class Evolution {
 public:
  static Evolution identity(std::vector<double> grid, int dim);
  // autonomous case: V(t) = exp(-i h (t - t_first))
  static Evolution from_generator(const Mat& h, std::vector<double> grid);
  // steps[i] maps states at grid[i] to states at grid[i+1]
  static Evolution from_step_unitaries(std::vector<double> grid,
                                       const std::vector<Mat>& steps);

  const std::vector<double>& grid() const { return grid_; }
  int dim() const { return dim_; }
  double start() const { return grid_.front(); }

  // grid index of t; throws TimeNotOnGrid
  std::size_t time_index(double t) const;
  bool on_grid(double t) const;

  // U(t, s) for grid times t >= s
  Mat propagator(double t, double s) const;

  // V(t) = U(t, t_first)
  const Mat& from_start(double t) const;

 private:
  Evolution(std::vector<double> grid, std::vector<Mat> cumulative);

  std::vector<double> grid_;
  std::vector<Mat> cumulative_;  // V(t_i), V(t_0) = 1
  int dim_ = 0;
};

// Heisenberg evolution of a from time t0 to time t: conjugation by the
// relative propagator, so that composing t0 -> s -> t equals t0 -> t exactly.
Mat heisenberg(const Mat& a, const Evolution& evo, double t, double t0);

// Block subalgebra of a matrix algebra: matrices of the form
// Q diag(B_1, ..., B_m) Q^dagger with Q = basis_change and contiguous blocks.
class BlockAlgebra {
 public:
  // empty zero-dimensional algebra; placeholder only
  BlockAlgebra() : basis_change_(Mat::Identity(0, 0)) {}
  BlockAlgebra(Mat basis_change, std::vector<int> block_sizes);

  static BlockAlgebra full(int dim);

  int dim() const { return static_cast<int>(basis_change_.rows()); }
  bool is_full() const { return block_sizes_.size() == 1; }
  const Mat& basis_change() const { return basis_change_; }
  const std::vector<int>& block_sizes() const { return block_sizes_; }
  // [begin, end) ranges of the blocks in the rotated basis
  std::vector<std::pair<int, int>> block_ranges() const;

  // true when every block of this partition lies inside a block of `coarser`
  bool refines(const BlockAlgebra& coarser) const;

 private:
  Mat basis_change_;
  std::vector<int> block_sizes_;
};

// Compression onto the block algebra: block-diagonal part of Q^dagger a Q,
// rotated back. Unital, positive, trace-preserving, idempotent.
Mat pinch(const Mat& a, const BlockAlgebra& alg);

// Time-indexed block algebras sharing one basis change, with partitions
// refining (algebras shrinking) as time increases.
class Filtration {
 public:
  explicit Filtration(std::vector<std::pair<double, BlockAlgebra>> entries);

  const std::vector<std::pair<double, BlockAlgebra>>& entries() const {
    return entries_;
  }

  // latest entry with time <= t; the earliest (coarsest-partition, largest)
  // algebra if t precedes the first entry
  const BlockAlgebra& at_time(double t) const;

 private:
  std::vector<std::pair<double, BlockAlgebra>> entries_;
};

}  // namespace qlab
