#pragma once

#include <cstdint>
#include <vector>

#include "qlab/histories.hpp"

namespace qlab {

// Indirect-measurement model: identical independent probes interact with the
// system one after another. Given system outcome alpha, probe observables
// evolve by conjugation b -> U_alpha b U_alpha^dagger; each probe is then
// measured projectively in the probe resolution.
struct NdmModel {
  ProjectiveResolution system_resolution;  // {Pi_alpha}
  DensityState probe_state;                // psi
  std::vector<Mat> probe_unitaries;        // U_alpha, one per system outcome
  ProjectiveResolution probe_resolution;   // {pi_xi}

  NdmModel(ProjectiveResolution system, DensityState probe,
           std::vector<Mat> unitaries, ProjectiveResolution probe_res);

  std::size_t system_outcomes() const { return system_resolution.size(); }
  std::size_t probe_outcomes() const { return probe_resolution.size(); }
  int system_dim() const { return system_resolution.dim(); }
  int probe_dim() const { return probe_state.dim(); }

  // two-level system, probe |0>, U_0 = 1, U_1 = rotation by phi, probe
  // measured in the computational basis
  static NdmModel rotation(double phi);
};

// p(xi|alpha) = psi(U_alpha pi_xi U_alpha^dagger); rows sum to 1
Eigen::MatrixXd outcome_kernel(const NdmModel& model);

// psi(U_alpha U_alpha'^dagger); its modulus drives the per-probe damping of
// system off-diagonals
Complex decoherence_factor(const NdmModel& model, std::size_t alpha,
                           std::size_t alpha_prime);

// System state after k probe interactions (probes unobserved): diagonal
// blocks are preserved, the (alpha', alpha) block is damped by
// decoherence_factor(alpha, alpha')^k.
Mat reduced_state_after(const NdmModel& model, const DensityState& rho, int k);

// Factorized Heisenberg-picture expectation of A (x) B_1 (x) ... (x) B_j
// after k interaction steps, for a system operator A supported between the
// alpha and alpha' eigenspaces: rho(A) * prod_{i<=min(j,k)} psi(U_a B_i
// U_a'^dagger) * factor^{max(0,k-j)} * prod_{i>k} psi(B_i).
Complex probe_chain_expectation(const NdmModel& model, const DensityState& rho,
                                const Mat& a_block, std::size_t alpha,
                                std::size_t alpha_prime,
                                const std::vector<Mat>& probe_ops, int k);

struct DecoherenceReport {
  Eigen::MatrixXcd factors;  // decoherence_factor(alpha, alpha')
  double mu = 0.0;           // max modulus over alpha != alpha'
  bool mu_less_than_one = false;
  int k0 = 0;
  // max over k <= k0 and off-diagonal blocks of
  // (block modulus of rho^(k)) - (initial modulus) * mu^k
  double max_damping_violation = 0.0;
  // max over alpha != alpha' of |factorized expectation| - mu^k0 with a
  // unit-norm block operator and trivial probe observables
  double max_offdiagonal_expectation = 0.0;
};

DecoherenceReport decoherence_bound_check(const NdmModel& model,
                                          const DensityState& rho, int k0);

// One Bayes step: posterior(alpha) proportional to prior(alpha) p(xi|alpha)
std::vector<double> posterior_update(const std::vector<double>& prior, int xi,
                                     const Eigen::MatrixXd& kernel);

// Closed form: p_alpha mu(xi|alpha) / mu(xi) for a whole outcome history
std::vector<double> posterior_closed_form(const std::vector<double>& prior,
                                          const std::vector<int>& outcomes,
                                          const Eigen::MatrixXd& kernel);

struct Trajectory {
  std::vector<int> outcomes;
  std::vector<std::vector<double>> posteriors;  // after each step
  std::uint64_t seed = 0;
  bool collapsed = false;  // max posterior reached 1 - eta
  int steps = 0;
};

// Samples outcome_k with probability sum_beta p^(k-1)(beta) p(xi|beta),
// updates the posterior, and stops early once max_alpha p^(k) >= 1 - eta.
// Identical seeds give identical trajectories.
Trajectory sample_trajectory(const NdmModel& model,
                             const std::vector<double>& initial, int k_max,
                             double eta, std::uint64_t seed);

struct MartingaleReport {
  double max_defect = 0.0;            // |E_k p^(k) - p^(k-1)|
  double max_route_difference = 0.0;  // recursive vs closed-form posterior
  std::size_t histories = 0;
};

// Exhaustive enumeration of all outcome histories up to length k.
MartingaleReport martingale_check(const NdmModel& model,
                                  const std::vector<double>& initial, int k,
                                  std::size_t cap = 1000000);

struct CollapseStatistics {
  int trajectories = 0;
  int collapsed = 0;
  int unresolved = 0;
  double collapse_fraction = 0.0;
  std::vector<double> target_frequency;  // over collapse targets
  std::vector<double> target_ci_radius;  // 3 sqrt(f(1-f)/N)
  double rate = 0.0;       // slope of mean log(1 - max posterior) vs k
  double r_squared = 0.0;  // of the regression
  bool conclusive = true;  // kernel rows pairwise distinguishable
};

// Monte Carlo ensemble with per-trajectory seeds mix_seed(base_seed, i);
// results are independent of `threads`.
CollapseStatistics ensemble_collapse_statistics(
    const NdmModel& model, const std::vector<double>& initial,
    int n_trajectories, int k_max, double eta, std::uint64_t base_seed,
    int threads = 1);

}  // namespace qlab
