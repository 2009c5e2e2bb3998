#include "qlab/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qlab/errors.hpp"

namespace qlab {

namespace {

constexpr double kSeparatingTol = 1e-12;

void require_dim(const Mat& a, int dim, const char* who) {
  if (a.rows() != dim || a.cols() != dim)
    fail(Errc::dimension_mismatch, std::string(who) + ": dimension mismatch");
}

}  // namespace

Mat CentralDecomposition::effective_density() const {
  Mat rho = Mat::Zero(dim(), dim());
  for (const auto& b : blocks) rho += b.weight * b.projection;
  return rho;
}

double CentralDecomposition::block_mean(const Mat& a,
                                        std::size_t lambda) const {
  const auto& b = blocks.at(lambda);
  return (b.projection * a).trace().real() / static_cast<double>(b.multiplicity);
}

CentralDecomposition central_decomposition(const DensityState& state,
                                           const BlockAlgebra& algebra,
                                           double cluster_tol) {
  if (state.dim() != algebra.dim())
    fail(Errc::dimension_mismatch, "state and algebra dimensions differ");
  Mat restricted = algebra.is_full() ? state.rho() : pinch(state.rho(), algebra);

  Observable spec = spectral_decompose(hermitian_part(restricted), cluster_tol);

  CentralDecomposition out{.blocks = {}, .algebra = algebra, .separating = true};
  for (const auto& line : spec.spectrum) {
    int mult = static_cast<int>(std::lround(line.projection.trace().real()));
    // eigenvalues of a density matrix; clamp -1e-12-sized roundoff
    out.blocks.push_back({std::max(line.eigenvalue, 0.0), line.projection, mult});
    if (line.eigenvalue < kSeparatingTol) out.separating = false;
  }
  // spectral_decompose returns strictly decreasing eigenvalues, which is
  // exactly the required block order
  return out;
}

Mat conditional_expectation_centralizer(const Mat& a,
                                        const CentralDecomposition& decomp) {
  require_dim(a, decomp.dim(), "conditional_expectation_centralizer");
  Mat out = Mat::Zero(a.rows(), a.cols());
  for (const auto& b : decomp.blocks) out += b.projection * a * b.projection;
  return out;
}

Mat conditional_expectation_center(const Mat& a,
                                   const CentralDecomposition& decomp) {
  require_dim(a, decomp.dim(), "conditional_expectation_center");
  Mat out = Mat::Zero(a.rows(), a.cols());
  for (const auto& b : decomp.blocks) {
    Complex mean = (b.projection * a).trace() / static_cast<double>(b.multiplicity);
    out += mean * b.projection;
  }
  return out;
}

double variance(const Mat& a, const CentralDecomposition& decomp) {
  require_dim(a, decomp.dim(), "variance");
  if (!is_hermitian(a, 1e-12))
    fail(Errc::not_hermitian, "variance needs a Hermitian operator");
  // sum_lambda p_lambda tr(Pi_lambda (a - mean)^2); manifestly >= 0 and equal
  // to omega((a - a^omega)^2) for the effective density
  double total = 0.0;
  for (const auto& b : decomp.blocks) {
    if (b.weight <= 0.0) continue;
    double mean = (b.projection * a).trace().real() /
                  static_cast<double>(b.multiplicity);
    Mat shifted = a - mean * Mat::Identity(a.rows(), a.cols());
    double term = (b.projection * shifted * shifted).trace().real();
    total += b.weight * std::max(term, 0.0);
  }
  return std::sqrt(std::max(total, 0.0));
}

double functional_norm(const Mat& a, const DensityState& state,
                       const BlockAlgebra& algebra) {
  require_dim(a, state.dim(), "functional_norm");
  if (state.dim() != algebra.dim())
    fail(Errc::dimension_mismatch, "state and algebra dimensions differ");
  // omega([a,b]) = tr([rho,a] b); restricting b to the algebra dualizes to
  // pinching, and the norm over unit-operator-norm b is the trace norm
  Mat c = commutator(state.rho(), a);
  return trace_norm(algebra.is_full() ? c : pinch(c, algebra));
}

EmpiricalReport empirical_property_check(const Observable& a,
                                         const Evolution& evo,
                                         const DensityState& state,
                                         const BlockAlgebra& algebra_at_t,
                                         double t, double delta) {
  if (delta < 0.0) fail(Errc::invalid_argument, "delta must be non-negative");
  EmpiricalReport report;
  report.delta = delta;
  report.a_at_t = heisenberg(a.op, evo, t, evo.start());
  report.decomposition = central_decomposition(state, algebra_at_t);
  report.variance = variance(report.a_at_t, report.decomposition);
  report.is_empirical = report.variance <= delta;
  report.a_omega =
      conditional_expectation_center(report.a_at_t, report.decomposition);
  report.functional_norm = functional_norm(report.a_at_t, state, algebra_at_t);

  // pinching distance over the spectral resolution of a(t)
  Observable at_t = spectral_decompose(hermitian_part(report.a_at_t));
  Mat pinched = Mat::Zero(state.dim(), state.dim());
  for (const auto& line : at_t.spectrum)
    pinched += line.projection * state.rho() * line.projection;
  report.pinching_distance = trace_norm(state.rho() - pinched);

  for (std::size_t l = 0; l < report.decomposition.blocks.size(); ++l) {
    const auto& b = report.decomposition.blocks[l];
    double mean = report.decomposition.block_mean(report.a_at_t, l);
    double nearest = 0.0;
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& line : at_t.spectrum) {
      double g = std::abs(line.eigenvalue - mean);
      if (g < gap) {
        gap = g;
        nearest = line.eigenvalue;
      }
    }
    double pn = b.weight * static_cast<double>(b.multiplicity);
    double bound = pn > 0.0 ? report.variance / std::sqrt(pn)
                            : std::numeric_limits<double>::infinity();
    report.gaps.push_back({l, mean, nearest, gap, bound});
  }
  return report;
}

MeasurementScan measurement_time_scan(const Observable& a, const Evolution& evo,
                                      const DensityState& state,
                                      const std::optional<Filtration>& filtration,
                                      const std::vector<double>& grid,
                                      double delta) {
  if (grid.empty()) fail(Errc::empty_grid, "scan grid is empty");
  MeasurementScan scan;
  scan.delta = delta;
  scan.detector_curves.resize(a.outcomes());

  for (double t : grid) {
    if (!evo.on_grid(t))
      fail(Errc::time_not_on_grid, "scan time not on the evolution grid");
    BlockAlgebra alg = filtration ? filtration->at_time(t)
                                  : BlockAlgebra::full(state.dim());
    Mat a_t = heisenberg(a.op, evo, t, evo.start());
    CentralDecomposition decomp = central_decomposition(state, alg);
    double var = variance(a_t, decomp);
    scan.times.push_back(t);
    scan.variance_curve.push_back(var);
    if (!scan.first_time && var <= delta) scan.first_time = t;
    for (std::size_t i = 0; i < a.outcomes(); ++i) {
      Mat p_t = heisenberg(a.spectrum[i].projection, evo, t, evo.start());
      scan.detector_curves[i].push_back(var + 1.0 - state.expect_real(p_t));
    }
  }
  return scan;
}

bool in_state_set(const MeasurementScan& scan, double delta, double t_star) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scan.times.size(); ++i)
    if (scan.times[i] >= t_star) best = std::min(best, scan.variance_curve[i]);
  return best < delta;
}

SequentialMeasurement sequential_joint_probability(
    const Observable& a1, double t1, const Observable& a2, double t2,
    const DensityState& state, const Evolution& evo, double delta1,
    double delta2, double cluster_tol) {
  if (!(t1 < t2)) fail(Errc::invalid_argument, "need t1 < t2");
  for (std::size_t i = 0; i < a1.outcomes(); ++i)
    for (std::size_t j = i + 1; j < a1.outcomes(); ++j)
      if (std::abs(a1.spectrum[i].eigenvalue - a1.spectrum[j].eigenvalue) <=
          2.0 * delta1)
        fail(Errc::eigenvalue_gap_too_small,
             "first observable's eigenvalue gap is below 2*delta1");

  const std::size_t k1 = a1.outcomes();
  const std::size_t k2 = a2.outcomes();
  const double t_fid = evo.start();

  Mat a1_t = heisenberg(a1.op, evo, t1, t_fid);
  std::vector<Mat> p1(k1), p2(k2);
  for (std::size_t j = 0; j < k1; ++j)
    p1[j] = heisenberg(a1.spectrum[j].projection, evo, t1, t_fid);
  for (std::size_t l = 0; l < k2; ++l)
    p2[l] = heisenberg(a2.spectrum[l].projection, evo, t2, t_fid);

  CentralDecomposition decomp1 =
      central_decomposition(state, BlockAlgebra::full(state.dim()), cluster_tol);

  SequentialMeasurement out;
  out.joint_central = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k1),
                                            static_cast<Eigen::Index>(k2));
  out.joint_direct = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k1),
                                           static_cast<Eigen::Index>(k2));

  for (std::size_t j = 0; j < k1; ++j) {
    SequentialMeasurement::Branch branch;
    branch.outcome = j;

    // blocks whose a1(t1) mean lies within delta1 of the eigenvalue
    double p_j = 0.0;
    Mat conditioned = Mat::Zero(state.dim(), state.dim());
    for (std::size_t l = 0; l < decomp1.blocks.size(); ++l) {
      double mean = decomp1.block_mean(a1_t, l);
      if (std::abs(mean - a1.spectrum[j].eigenvalue) < delta1) {
        branch.lambdas.push_back(l);
        const auto& b = decomp1.blocks[l];
        p_j += b.weight * static_cast<double>(b.multiplicity);
        conditioned += b.projection * state.rho() * b.projection;
      }
    }
    branch.probability = p_j;

    if (p_j > 0.0) {
      DensityState omega_j(hermitian_part(conditioned) / p_j);
      CentralDecomposition decomp2 = central_decomposition(
          omega_j, BlockAlgebra::full(state.dim()), cluster_tol);
      Mat a2_t = heisenberg(a2.op, evo, t2, t_fid);
      for (std::size_t l = 0; l < k2; ++l) {
        double q = 0.0;
        for (std::size_t m = 0; m < decomp2.blocks.size(); ++m) {
          double mean = decomp2.block_mean(a2_t, m);
          if (std::abs(mean - a2.spectrum[l].eigenvalue) < delta2) {
            const auto& b = decomp2.blocks[m];
            q += b.weight * static_cast<double>(b.multiplicity);
          }
        }
        out.joint_central(static_cast<Eigen::Index>(j),
                          static_cast<Eigen::Index>(l)) = p_j * q;
      }
      if (p_j > delta2) branch.post_state = omega_j;
    }

    for (std::size_t l = 0; l < k2; ++l)
      out.joint_direct(static_cast<Eigen::Index>(j),
                       static_cast<Eigen::Index>(l)) =
          state.expect_real(p1[j] * p2[l] * p1[j]);

    out.branches.push_back(std::move(branch));
  }

  out.residual = (out.joint_central - out.joint_direct).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace qlab
