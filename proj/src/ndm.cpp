#include "qlab/ndm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "qlab/errors.hpp"
#include "qlab/rng.hpp"

namespace qlab {

namespace {

constexpr double kUnitaryTol = 1e-10;
constexpr double kRowSumTol = 1e-10;

void require_distribution(const std::vector<double>& p, std::size_t size,
                          const char* who) {
  if (p.size() != size)
    fail(Errc::dimension_mismatch, std::string(who) + ": wrong length");
  double sum = 0.0;
  for (double w : p) {
    if (w < 0.0) fail(Errc::not_a_state, std::string(who) + ": negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-10)
    fail(Errc::not_a_state, std::string(who) + ": weights do not sum to 1");
}

}  // namespace

NdmModel::NdmModel(ProjectiveResolution system, DensityState probe,
                   std::vector<Mat> unitaries, ProjectiveResolution probe_res)
    : system_resolution(std::move(system)),
      probe_state(std::move(probe)),
      probe_unitaries(std::move(unitaries)),
      probe_resolution(std::move(probe_res)) {
  system_resolution.validate();
  probe_resolution.validate();
  if (probe_unitaries.size() != system_resolution.size())
    fail(Errc::dimension_mismatch, "need one probe unitary per system outcome");
  for (const Mat& u : probe_unitaries) {
    if (u.rows() != probe_state.dim() || u.cols() != probe_state.dim())
      fail(Errc::dimension_mismatch, "probe unitary dimension mismatch");
    if (unitarity_defect(u) > kUnitaryTol)
      fail(Errc::not_unitary, "probe unitary fails the unitarity check");
  }
  if (probe_resolution.dim() != probe_state.dim())
    fail(Errc::dimension_mismatch, "probe resolution dimension mismatch");
  // row normalization is structural given unitarity; verify anyway
  Eigen::MatrixXd kernel = outcome_kernel(*this);
  for (Eigen::Index a = 0; a < kernel.rows(); ++a)
    if (std::abs(kernel.row(a).sum() - 1.0) > kRowSumTol)
      fail(Errc::invalid_argument, "outcome kernel row does not sum to 1");
}

NdmModel NdmModel::rotation(double phi) {
  ProjectiveResolution system;
  system.label = "system";
  Mat p0 = Mat::Zero(2, 2), p1 = Mat::Zero(2, 2);
  p0(0, 0) = 1.0;
  p1(1, 1) = 1.0;
  system.projections = {p0, p1};

  Vec ground(2);
  ground << 1.0, 0.0;

  Mat u0 = Mat::Identity(2, 2);
  Mat u1(2, 2);
  u1 << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);

  ProjectiveResolution probe;
  probe.label = "probe";
  probe.projections = {p0, p1};

  return NdmModel(std::move(system), DensityState::pure(ground), {u0, u1},
                  std::move(probe));
}

Eigen::MatrixXd outcome_kernel(const NdmModel& model) {
  Eigen::MatrixXd kernel(model.system_outcomes(), model.probe_outcomes());
  for (std::size_t a = 0; a < model.system_outcomes(); ++a) {
    const Mat& u = model.probe_unitaries[a];
    for (std::size_t x = 0; x < model.probe_outcomes(); ++x) {
      Mat evolved = u * model.probe_resolution.projections[x] * u.adjoint();
      kernel(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(x)) =
          model.probe_state.expect_real(evolved);
    }
  }
  return kernel;
}

Complex decoherence_factor(const NdmModel& model, std::size_t alpha,
                           std::size_t alpha_prime) {
  if (alpha >= model.system_outcomes() || alpha_prime >= model.system_outcomes())
    fail(Errc::index_out_of_range, "system outcome out of range");
  return model.probe_state.expect(model.probe_unitaries[alpha] *
                                  model.probe_unitaries[alpha_prime].adjoint());
}

Mat reduced_state_after(const NdmModel& model, const DensityState& rho, int k) {
  if (rho.dim() != model.system_dim())
    fail(Errc::dimension_mismatch, "state dimension mismatch");
  if (k < 0) fail(Errc::invalid_argument, "k must be non-negative");
  const std::size_t n = model.system_outcomes();
  Mat out = Mat::Zero(rho.dim(), rho.dim());
  for (std::size_t a = 0; a < n; ++a) {
    const Mat& pa = model.system_resolution.projections[a];
    for (std::size_t b = 0; b < n; ++b) {
      const Mat& pb = model.system_resolution.projections[b];
      Complex damp = std::pow(decoherence_factor(model, a, b), k);
      out += damp * (pb * rho.rho() * pa);
    }
  }
  return out;
}

Complex probe_chain_expectation(const NdmModel& model, const DensityState& rho,
                                const Mat& a_block, std::size_t alpha,
                                std::size_t alpha_prime,
                                const std::vector<Mat>& probe_ops, int k) {
  if (alpha >= model.system_outcomes() || alpha_prime >= model.system_outcomes())
    fail(Errc::index_out_of_range, "system outcome out of range");
  if (k < 0) fail(Errc::invalid_argument, "k must be non-negative");
  const Mat& pa = model.system_resolution.projections[alpha];
  const Mat& pb = model.system_resolution.projections[alpha_prime];
  if (operator_norm(a_block - pa * a_block * pb) > 1e-10)
    fail(Errc::invalid_argument,
         "block operator must map the alpha' eigenspace into the alpha one");

  const Mat& ua = model.probe_unitaries[alpha];
  const Mat& ub = model.probe_unitaries[alpha_prime];
  Complex value = rho.expect(a_block);
  const int j = static_cast<int>(probe_ops.size());
  for (int i = 0; i < std::min(j, k); ++i)
    value *= model.probe_state.expect(ua * probe_ops[static_cast<std::size_t>(i)] *
                                      ub.adjoint());
  if (k > j)
    value *= std::pow(model.probe_state.expect(ua * ub.adjoint()), k - j);
  for (int i = k; i < j; ++i)
    value *= model.probe_state.expect(probe_ops[static_cast<std::size_t>(i)]);
  return value;
}

DecoherenceReport decoherence_bound_check(const NdmModel& model,
                                          const DensityState& rho, int k0) {
  if (k0 < 1) fail(Errc::invalid_argument, "k0 must be positive");
  const std::size_t n = model.system_outcomes();
  DecoherenceReport report;
  report.k0 = k0;
  report.factors = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n),
                                          static_cast<Eigen::Index>(n));
  report.mu = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      Complex f = decoherence_factor(model, a, b);
      report.factors(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = f;
      if (a != b) report.mu = std::max(report.mu, std::abs(f));
    }
  report.mu_less_than_one = report.mu < 1.0;

  // block-wise damping of the unobserved reduced state
  std::vector<Mat> initial_blocks(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      initial_blocks[a * n + b] = model.system_resolution.projections[b] *
                                  rho.rho() *
                                  model.system_resolution.projections[a];
  for (int k = 1; k <= k0; ++k) {
    Mat rho_k = reduced_state_after(model, rho, k);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b) continue;
        double now = (model.system_resolution.projections[b] * rho_k *
                      model.system_resolution.projections[a])
                         .cwiseAbs()
                         .maxCoeff();
        double bound = initial_blocks[a * n + b].cwiseAbs().maxCoeff() *
                       std::pow(report.mu, k);
        report.max_damping_violation =
            std::max(report.max_damping_violation, now - bound);
      }
  }

  // Heisenberg expectation of a unit-norm cross-block operator with trivial
  // probe observables; modulus must sit below mu^k0
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      Mat block = initial_blocks[a * n + b].adjoint();
      double norm = operator_norm(block);
      if (norm <= 0.0) continue;
      Complex value =
          probe_chain_expectation(model, rho, block / norm, a, b, {}, k0);
      report.max_offdiagonal_expectation =
          std::max(report.max_offdiagonal_expectation, std::abs(value));
    }
  return report;
}

std::vector<double> posterior_update(const std::vector<double>& prior, int xi,
                                     const Eigen::MatrixXd& kernel) {
  require_distribution(prior, static_cast<std::size_t>(kernel.rows()),
                       "posterior prior");
  if (xi < 0 || xi >= kernel.cols())
    fail(Errc::index_out_of_range, "outcome out of range");
  double denom = 0.0;
  for (std::size_t b = 0; b < prior.size(); ++b)
    denom += prior[b] * kernel(static_cast<Eigen::Index>(b), xi);
  if (denom <= 1e-300)
    fail(Errc::impossible_outcome, "outcome has zero probability under the prior");
  std::vector<double> post(prior.size());
  for (std::size_t a = 0; a < prior.size(); ++a)
    post[a] = prior[a] * kernel(static_cast<Eigen::Index>(a), xi) / denom;
  return post;
}

std::vector<double> posterior_closed_form(const std::vector<double>& prior,
                                          const std::vector<int>& outcomes,
                                          const Eigen::MatrixXd& kernel) {
  require_distribution(prior, static_cast<std::size_t>(kernel.rows()),
                       "posterior prior");
  std::vector<double> likelihood(prior.size(), 1.0);
  for (int xi : outcomes) {
    if (xi < 0 || xi >= kernel.cols())
      fail(Errc::index_out_of_range, "outcome out of range");
    for (std::size_t a = 0; a < prior.size(); ++a)
      likelihood[a] *= kernel(static_cast<Eigen::Index>(a), xi);
  }
  double denom = 0.0;
  for (std::size_t a = 0; a < prior.size(); ++a)
    denom += prior[a] * likelihood[a];
  if (denom <= 1e-300)
    fail(Errc::impossible_outcome, "history has zero probability");
  std::vector<double> post(prior.size());
  for (std::size_t a = 0; a < prior.size(); ++a)
    post[a] = prior[a] * likelihood[a] / denom;
  return post;
}

Trajectory sample_trajectory(const NdmModel& model,
                             const std::vector<double>& initial, int k_max,
                             double eta, std::uint64_t seed) {
  require_distribution(initial, model.system_outcomes(), "initial weights");
  if (k_max < 0) fail(Errc::invalid_argument, "k_max must be non-negative");
  Eigen::MatrixXd kernel = outcome_kernel(model);
  Rng rng(seed);

  Trajectory traj;
  traj.seed = seed;
  std::vector<double> posterior = initial;
  std::vector<double> step_probs(model.probe_outcomes());
  for (int k = 0; k < k_max; ++k) {
    for (std::size_t x = 0; x < step_probs.size(); ++x) {
      double q = 0.0;
      for (std::size_t b = 0; b < posterior.size(); ++b)
        q += posterior[b] * kernel(static_cast<Eigen::Index>(b),
                                   static_cast<Eigen::Index>(x));
      step_probs[x] = q;
    }
    int xi = static_cast<int>(rng.categorical(step_probs));
    posterior = posterior_update(posterior, xi, kernel);
    traj.outcomes.push_back(xi);
    traj.posteriors.push_back(posterior);
    traj.steps = k + 1;
    if (*std::max_element(posterior.begin(), posterior.end()) >= 1.0 - eta) {
      traj.collapsed = true;
      break;
    }
  }
  return traj;
}

namespace {

struct MartingaleWalker {
  const Eigen::MatrixXd& kernel;
  const std::vector<double>& prior;
  int depth_limit;
  MartingaleReport report;

  // likelihood carries mu(prefix|alpha) per alpha so the closed-form
  // posterior can be compared against the recursive one at every node
  void walk(std::vector<double> likelihood,
            const std::vector<double>& posterior, std::vector<int>& prefix) {
    if (static_cast<int>(prefix.size()) >= depth_limit) return;
    const std::size_t n_out = static_cast<std::size_t>(kernel.cols());
    std::vector<double> expectation(prior.size(), 0.0);
    for (std::size_t x = 0; x < n_out; ++x) {
      double step = 0.0;
      for (std::size_t b = 0; b < prior.size(); ++b)
        step += posterior[b] * kernel(static_cast<Eigen::Index>(b),
                                      static_cast<Eigen::Index>(x));
      if (step <= 0.0) continue;
      std::vector<double> next = posterior;
      for (std::size_t a = 0; a < next.size(); ++a)
        next[a] = posterior[a] * kernel(static_cast<Eigen::Index>(a),
                                        static_cast<Eigen::Index>(x)) /
                  step;
      for (std::size_t a = 0; a < next.size(); ++a)
        expectation[a] += step * next[a];

      std::vector<double> next_likelihood = likelihood;
      for (std::size_t a = 0; a < next_likelihood.size(); ++a)
        next_likelihood[a] *= kernel(static_cast<Eigen::Index>(a),
                                     static_cast<Eigen::Index>(x));
      prefix.push_back(static_cast<int>(x));

      double denom = 0.0;
      for (std::size_t a = 0; a < prior.size(); ++a)
        denom += prior[a] * next_likelihood[a];
      if (denom > 0.0) {
        for (std::size_t a = 0; a < prior.size(); ++a) {
          double closed = prior[a] * next_likelihood[a] / denom;
          report.max_route_difference =
              std::max(report.max_route_difference, std::abs(closed - next[a]));
        }
      }
      ++report.histories;

      walk(std::move(next_likelihood), next, prefix);
      prefix.pop_back();
    }
    // bounded-martingale property: E_k p^(k) = p^(k-1)
    for (std::size_t a = 0; a < prior.size(); ++a)
      report.max_defect =
          std::max(report.max_defect, std::abs(expectation[a] - posterior[a]));
  }
};

}  // namespace

MartingaleReport martingale_check(const NdmModel& model,
                                  const std::vector<double>& initial, int k,
                                  std::size_t cap) {
  require_distribution(initial, model.system_outcomes(), "initial weights");
  if (k < 1) fail(Errc::invalid_argument, "k must be positive");
  double total = 0.0;
  double power = 1.0;
  for (int i = 0; i < k; ++i) {
    power *= static_cast<double>(model.probe_outcomes());
    total += power;
  }
  if (total > static_cast<double>(cap))
    fail(Errc::enumeration_too_large,
         "outcome tree exceeds the enumeration cap");

  Eigen::MatrixXd kernel = outcome_kernel(model);
  MartingaleWalker walker{kernel, initial, k, {}};
  std::vector<int> prefix;
  walker.walk(std::vector<double>(initial.size(), 1.0), initial, prefix);
  return walker.report;
}

CollapseStatistics ensemble_collapse_statistics(
    const NdmModel& model, const std::vector<double>& initial,
    int n_trajectories, int k_max, double eta, std::uint64_t base_seed,
    int threads) {
  require_distribution(initial, model.system_outcomes(), "initial weights");
  if (n_trajectories <= 0)
    fail(Errc::invalid_argument, "need at least one trajectory");

  CollapseStatistics stats;
  stats.trajectories = n_trajectories;

  // non-degeneracy: collapse targets are distinguishable only when no two
  // kernel rows coincide
  Eigen::MatrixXd kernel = outcome_kernel(model);
  for (Eigen::Index a = 0; a < kernel.rows() && stats.conclusive; ++a)
    for (Eigen::Index b = a + 1; b < kernel.rows(); ++b)
      if ((kernel.row(a) - kernel.row(b)).cwiseAbs().maxCoeff() <= 1e-12) {
        stats.conclusive = false;
        break;
      }

  std::vector<Trajectory> trajectories(static_cast<std::size_t>(n_trajectories));
  int n_threads = std::max(1, threads);
  if (n_threads == 1) {
    for (int i = 0; i < n_trajectories; ++i)
      trajectories[static_cast<std::size_t>(i)] = sample_trajectory(
          model, initial, k_max, eta, mix_seed(base_seed, static_cast<std::uint64_t>(i)));
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> cursor{0};
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&]() {
        while (true) {
          int i = cursor.fetch_add(1);
          if (i >= n_trajectories) break;
          trajectories[static_cast<std::size_t>(i)] = sample_trajectory(
              model, initial, k_max, eta,
              mix_seed(base_seed, static_cast<std::uint64_t>(i)));
        }
      });
    for (auto& th : pool) th.join();
  }

  // index-ordered aggregation keeps the statistics bit-identical under any
  // thread count
  stats.target_frequency.assign(model.system_outcomes(), 0.0);
  stats.target_ci_radius.assign(model.system_outcomes(), 0.0);
  std::vector<double> log_sum;
  std::vector<int> log_count;
  for (const Trajectory& traj : trajectories) {
    if (traj.collapsed) {
      ++stats.collapsed;
      const auto& last = traj.posteriors.back();
      std::size_t target = static_cast<std::size_t>(
          std::max_element(last.begin(), last.end()) - last.begin());
      stats.target_frequency[target] += 1.0;
    } else {
      ++stats.unresolved;
    }
    for (std::size_t k = 0; k < traj.posteriors.size(); ++k) {
      double residue =
          1.0 - *std::max_element(traj.posteriors[k].begin(),
                                  traj.posteriors[k].end());
      if (residue <= 0.0) continue;  // exact collapse has no decay left
      if (log_sum.size() <= k) {
        log_sum.resize(k + 1, 0.0);
        log_count.resize(k + 1, 0);
      }
      log_sum[k] += std::log(residue);
      ++log_count[k];
    }
  }
  stats.collapse_fraction =
      static_cast<double>(stats.collapsed) / static_cast<double>(n_trajectories);
  const double n = static_cast<double>(n_trajectories);
  for (std::size_t a = 0; a < stats.target_frequency.size(); ++a) {
    double f = stats.target_frequency[a] / n;
    stats.target_frequency[a] = f;
    stats.target_ci_radius[a] = 3.0 * std::sqrt(f * (1.0 - f) / n);
  }

  // linear fit of mean log residue against the step index
  std::vector<double> xs, ys;
  int min_count = std::max(5, n_trajectories / 1000);
  for (std::size_t k = 0; k < log_sum.size(); ++k)
    if (log_count[k] >= min_count) {
      xs.push_back(static_cast<double>(k + 1));
      ys.push_back(log_sum[k] / static_cast<double>(log_count[k]));
    }
  if (xs.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
      syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx > 0.0 && syy > 0.0) {
      stats.rate = sxy / sxx;
      stats.r_squared = (sxy * sxy) / (sxx * syy);
    }
  }
  return stats;
}

}  // namespace qlab
