#pragma once

#include <optional>
#include <vector>

#include "qlab/histories.hpp"
#include "qlab/operator_core.hpp"

namespace qlab {

// Central decomposition of a state restricted to a block algebra: the
// eigenweights p_lambda, eigenprojections Pi_lambda and multiplicities
// n_lambda of the (pinched) density matrix, ordered by decreasing weight.
// sum_lambda p_lambda * n_lambda = 1. `separating` is false when the
// restricted state has eigenvalues below 1e-12, in which case centralizer
// statements only hold on the range of the state.
struct CentralDecomposition {
  struct Block {
    double weight;       // p_lambda
    Mat projection;      // Pi_lambda
    int multiplicity;    // n_lambda = rank(Pi_lambda)
  };

  std::vector<Block> blocks;
  BlockAlgebra algebra;
  bool separating = true;

  int dim() const { return algebra.dim(); }
  // sum p_lambda Pi_lambda; equals the restricted density matrix up to the
  // clustering tolerance
  Mat effective_density() const;
  double block_mean(const Mat& a, std::size_t lambda) const;  // tr(Pi a)/n
};

CentralDecomposition central_decomposition(const DensityState& state,
                                           const BlockAlgebra& algebra,
                                           double cluster_tol = 1e-8);

inline CentralDecomposition central_decomposition(const DensityState& state,
                                                  double cluster_tol = 1e-8) {
  return central_decomposition(state, BlockAlgebra::full(state.dim()),
                               cluster_tol);
}

// Conditional expectation onto the centralizer (the commutant of the
// restricted state): pinching over the eigenprojections,
// eps(a) = sum Pi_lambda a Pi_lambda. Preserves omega.
Mat conditional_expectation_centralizer(const Mat& a,
                                        const CentralDecomposition& decomp);

// Conditional expectation onto the center of the centralizer:
// a^omega = sum (tr(Pi_lambda a)/n_lambda) Pi_lambda. Preserves omega,
// idempotent, unital.
Mat conditional_expectation_center(const Mat& a,
                                   const CentralDecomposition& decomp);

// sqrt(omega((a - a^omega)^2)) for Hermitian a; zero iff a acts as a
// central element on the range of the state
double variance(const Mat& a, const CentralDecomposition& decomp);

// Norm of the functional b -> omega([a, b]) over the block algebra;
// equals the trace norm of pinch([rho, a]) by trace duality. Zero exactly
// on the centralizer.
double functional_norm(const Mat& a, const DensityState& state,
                       const BlockAlgebra& algebra);

inline double functional_norm(const Mat& a, const DensityState& state) {
  return functional_norm(a, state, BlockAlgebra::full(state.dim()));
}

// Diagnostics for one potential property at one time.
struct EmpiricalReport {
  bool is_empirical = false;  // variance <= delta
  double variance = 0.0;
  double delta = 0.0;
  Mat a_at_t;       // Heisenberg-evolved operator
  Mat a_omega;      // central part
  double functional_norm = 0.0;
  // trace norm of rho - sum_i P_i rho P_i over the spectral resolution of
  // a(t); small iff omega is nearly a mixture of eigenstates
  double pinching_distance = 0.0;

  struct BlockGap {
    std::size_t lambda;
    double block_mean;            // mean of a(t) on the block
    double nearest_eigenvalue;    // eigenvalue of a(t) closest to the mean
    double gap;                   // |nearest_eigenvalue - block_mean|
    double epsilon_bound;         // variance / sqrt(p_lambda n_lambda)
  };
  std::vector<BlockGap> gaps;

  CentralDecomposition decomposition;
};

EmpiricalReport empirical_property_check(const Observable& a,
                                         const Evolution& evo,
                                         const DensityState& state,
                                         const BlockAlgebra& algebra_at_t,
                                         double t, double delta);

// Variance curve over a time grid, with one detector curve per outcome of
// the observable: T(t) = variance of a(t), T_i(t) = T(t) + 1 - omega(P_i(t)).
struct MeasurementScan {
  std::vector<double> times;
  std::vector<double> variance_curve;
  std::vector<std::vector<double>> detector_curves;  // [outcome][time]
  std::optional<double> first_time;                  // earliest T(t) <= delta
  double delta = 0.0;
};

MeasurementScan measurement_time_scan(const Observable& a, const Evolution& evo,
                                      const DensityState& state,
                                      const std::optional<Filtration>& filtration,
                                      const std::vector<double>& grid,
                                      double delta);

// membership in the state set S(a, delta, t_star): the scan dips below delta
// at some grid time >= t_star
bool in_state_set(const MeasurementScan& scan, double delta, double t_star);

// Two sequential measurements: the joint outcome table computed once through
// the central decomposition and once directly as omega(P_j P_l P_j), with
// the difference reported as the consistency residual. Branch states are
// returned for outcomes of probability above delta2.
struct SequentialMeasurement {
  Eigen::MatrixXd joint_central;
  Eigen::MatrixXd joint_direct;
  double residual = 0.0;  // max |central - direct|

  struct Branch {
    std::size_t outcome;
    double probability;               // central-route P_j
    std::vector<std::size_t> lambdas; // blocks within delta1 of alpha_j
    std::optional<DensityState> post_state;
  };
  std::vector<Branch> branches;
};

SequentialMeasurement sequential_joint_probability(
    const Observable& a1, double t1, const Observable& a2, double t2,
    const DensityState& state, const Evolution& evo, double delta1,
    double delta2, double cluster_tol = 1e-8);

}  // namespace qlab
