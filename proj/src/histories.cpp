#include "qlab/histories.hpp"

#include <algorithm>
#include <cmath>

#include "qlab/errors.hpp"

namespace qlab {

namespace {

constexpr double kProjTol = 1e-10;
constexpr double kProbTol = 1e-12;

double clamp_probability(double p, const char* who) {
  if (p < -kProbTol)
    fail(Errc::negative_probability,
         std::string(who) + ": probability " + std::to_string(p));
  return std::clamp(p, 0.0, 1.0);
}

// odometer over a shape, invoking f for every multi-index
template <typename F>
void for_each_index(const std::vector<std::size_t>& shape, F&& f) {
  std::vector<int> idx(shape.size(), 0);
  if (shape.empty()) {
    f(idx);
    return;
  }
  while (true) {
    f(idx);
    int pos = static_cast<int>(shape.size()) - 1;
    while (pos >= 0) {
      if (++idx[pos] < static_cast<int>(shape[pos])) break;
      idx[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
}

}  // namespace

ProjectiveResolution ProjectiveResolution::from_observable(
    const Observable& obs, std::string label) {
  ProjectiveResolution out;
  out.label = std::move(label);
  for (const auto& line : obs.spectrum) out.projections.push_back(line.projection);
  out.validate();
  return out;
}

ProjectiveResolution ProjectiveResolution::trivial(int dim) {
  ProjectiveResolution out;
  out.label = "trivial";
  out.projections.push_back(Mat::Identity(dim, dim));
  return out;
}

void ProjectiveResolution::validate() const {
  if (projections.empty())
    fail(Errc::invalid_resolution, "resolution has no projections");
  const int n = dim();
  Mat sum = Mat::Zero(n, n);
  for (std::size_t i = 0; i < projections.size(); ++i) {
    const Mat& p = projections[i];
    if (p.rows() != n || p.cols() != n)
      fail(Errc::dimension_mismatch, "projection dimension mismatch");
    if (hermiticity_defect(p) > kProjTol || operator_norm(p * p - p) > kProjTol)
      fail(Errc::invalid_resolution, "projection is not a Hermitian idempotent");
    for (std::size_t j = i + 1; j < projections.size(); ++j)
      if (operator_norm(p * projections[j]) > kProjTol)
        fail(Errc::invalid_resolution, "projections are not orthogonal");
    sum += p;
  }
  if (operator_norm(sum - Mat::Identity(n, n)) > kProjTol)
    fail(Errc::invalid_resolution, "projections do not sum to the identity");
}

HistoryFamily::HistoryFamily(std::vector<HistorySlot> slots,
                             std::optional<Evolution> evolution)
    : slots_(std::move(slots)), evolution_(std::move(evolution)) {
  if (slots_.empty()) fail(Errc::invalid_argument, "history family has no slots");
  dim_ = slots_.front().resolution.dim();
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    slots_[i].resolution.validate();
    if (slots_[i].resolution.dim() != dim_)
      fail(Errc::dimension_mismatch, "slot dimensions differ");
    if (i > 0 && !(slots_[i].time > slots_[i - 1].time))
      fail(Errc::invalid_argument, "slot times must be strictly increasing");
  }
  if (evolution_ && evolution_->dim() != dim_)
    fail(Errc::dimension_mismatch, "evolution dimension mismatch");

  evolved_.resize(slots_.size());
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    for (const Mat& p : slots_[i].resolution.projections) {
      evolved_[i].push_back(
          evolution_ ? heisenberg(p, *evolution_, slots_[i].time,
                                  evolution_->start())
                     : p);
    }
  }
}

std::vector<std::size_t> HistoryFamily::shape() const {
  std::vector<std::size_t> out;
  out.reserve(slots_.size());
  for (const auto& s : slots_) out.push_back(s.resolution.size());
  return out;
}

std::size_t HistoryFamily::history_count() const {
  std::size_t n = 1;
  for (const auto& s : slots_) n *= s.resolution.size();
  return n;
}

const Mat& HistoryFamily::projection(std::size_t slot,
                                     std::size_t outcome) const {
  if (slot >= slots_.size() || outcome >= evolved_[slot].size())
    fail(Errc::index_out_of_range, "slot or outcome out of range");
  return evolved_[slot][outcome];
}

std::size_t HistoryFamily::flatten(const std::vector<int>& alpha) const {
  if (alpha.size() != slots_.size())
    fail(Errc::index_out_of_range, "multi-index length mismatch");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    std::size_t k = slots_[i].resolution.size();
    if (alpha[i] < 0 || static_cast<std::size_t>(alpha[i]) >= k)
      fail(Errc::index_out_of_range, "outcome index out of range");
    flat = flat * k + static_cast<std::size_t>(alpha[i]);
  }
  return flat;
}

std::vector<int> HistoryFamily::unflatten(std::size_t flat) const {
  std::vector<int> alpha(slots_.size(), 0);
  for (std::size_t i = slots_.size(); i-- > 0;) {
    std::size_t k = slots_[i].resolution.size();
    alpha[i] = static_cast<int>(flat % k);
    flat /= k;
  }
  if (flat != 0) fail(Errc::index_out_of_range, "flat index out of range");
  return alpha;
}

HistoryFamily HistoryFamily::without_slot(std::size_t i) const {
  if (i >= slots_.size()) fail(Errc::index_out_of_range, "slot out of range");
  if (slots_.size() == 1)
    fail(Errc::invalid_argument, "cannot remove the only slot");
  std::vector<HistorySlot> rest;
  for (std::size_t j = 0; j < slots_.size(); ++j)
    if (j != i) rest.push_back(slots_[j]);
  return HistoryFamily(std::move(rest), evolution_);
}

Mat chain_operator(const HistoryFamily& fam, const std::vector<int>& alpha,
                   std::size_t from_slot) {
  const std::size_t n = fam.slot_count();
  if (alpha.size() != n)
    fail(Errc::index_out_of_range, "multi-index length mismatch");
  if (from_slot >= n) fail(Errc::index_out_of_range, "from_slot out of range");
  Mat chain = fam.projection(n - 1, static_cast<std::size_t>(alpha[n - 1]));
  for (std::size_t i = n - 1; i-- > from_slot;)
    chain = chain * fam.projection(i, static_cast<std::size_t>(alpha[i]));
  return chain;
}

double history_probability(const DensityState& state, const HistoryFamily& fam,
                           const std::vector<int>& alpha) {
  if (state.dim() != fam.dim())
    fail(Errc::dimension_mismatch, "state and family dimensions differ");
  Mat h = chain_operator(fam, alpha);
  double p = (h * state.rho() * h.adjoint()).trace().real();
  return clamp_probability(p, "history_probability");
}

double total_probability(const DensityState& state, const HistoryFamily& fam) {
  double total = 0.0;
  for_each_index(fam.shape(), [&](const std::vector<int>& alpha) {
    total += history_probability(state, fam, alpha);
  });
  return total;
}

DecoherenceMatrix::DecoherenceMatrix(std::vector<std::size_t> shape,
                                     Mat entries,
                                     DecoherenceConvention convention)
    : shape_(std::move(shape)),
      entries_(std::move(entries)),
      convention_(convention) {}

std::size_t DecoherenceMatrix::flatten(const std::vector<int>& alpha) const {
  if (alpha.size() != shape_.size())
    fail(Errc::index_out_of_range, "multi-index length mismatch");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] < 0 || static_cast<std::size_t>(alpha[i]) >= shape_[i])
      fail(Errc::index_out_of_range, "outcome index out of range");
    flat = flat * shape_[i] + static_cast<std::size_t>(alpha[i]);
  }
  return flat;
}

std::vector<int> DecoherenceMatrix::unflatten(std::size_t flat) const {
  std::vector<int> alpha(shape_.size(), 0);
  for (std::size_t i = shape_.size(); i-- > 0;) {
    alpha[i] = static_cast<int>(flat % shape_[i]);
    flat /= shape_[i];
  }
  if (flat != 0) fail(Errc::index_out_of_range, "flat index out of range");
  return alpha;
}

Mat DecoherenceMatrix::diagonal_part() const {
  Mat d = Mat::Zero(entries_.rows(), entries_.cols());
  d.diagonal() = entries_.diagonal();
  return d;
}

double DecoherenceMatrix::off_diagonal_norm() const {
  return operator_norm(entries_ - diagonal_part());
}

void DecoherenceMatrix::validate() const {
  if (hermiticity_defect(entries_) > 1e-10)
    fail(Errc::not_hermitian, "decoherence matrix is not Hermitian");
  double trace = 0.0;
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    Complex d = entries_(i, i);
    if (std::abs(d.imag()) > 1e-10 || d.real() < -1e-12)
      fail(Errc::negative_probability, "invalid decoherence-matrix diagonal");
    trace += d.real();
  }
  if (std::abs(trace - 1.0) > 1e-10)
    fail(Errc::invalid_argument, "decoherence-matrix diagonal does not sum to 1");
}

DecoherenceMatrix decoherence_matrix(const DensityState& state,
                                     const HistoryFamily& fam,
                                     DecoherenceConvention convention,
                                     std::size_t cap) {
  if (state.dim() != fam.dim())
    fail(Errc::dimension_mismatch, "state and family dimensions differ");
  const std::size_t total = fam.history_count();
  if (total > cap)
    fail(Errc::family_too_large,
         std::to_string(total) + " histories exceed cap " + std::to_string(cap));

  // entries are Frobenius inner products of G_a = H_a sqrt(rho), which keeps
  // the matrix exactly Hermitian PSD in floating point
  Mat root = psd_sqrt(state.rho());
  std::vector<Mat> gram_factors;
  gram_factors.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Mat h = chain_operator(fam, fam.unflatten(flat));
    gram_factors.push_back(h * root);
  }

  Mat entries(total, total);
  for (std::size_t a = 0; a < total; ++a)
    for (std::size_t b = 0; b < total; ++b)
      entries(a, b) = (gram_factors[a].adjoint() * gram_factors[b]).trace();

  if (convention == DecoherenceConvention::final_slot_constrained) {
    // the last slot index is the fastest-varying part of the flat index
    const std::size_t last = fam.shape().back();
    for (std::size_t a = 0; a < total; ++a)
      for (std::size_t b = 0; b < total; ++b)
        if (a % last != b % last) entries(a, b) = 0.0;
  }
  return DecoherenceMatrix(fam.shape(), std::move(entries), convention);
}

Complex interference_term(const DensityState& state, const HistoryFamily& fam,
                          const std::vector<int>& alpha,
                          const std::vector<int>& beta, std::size_t slot) {
  const std::size_t n = fam.slot_count();
  if (n < 2)
    fail(Errc::index_out_of_range,
         "interference needs at least two slots");
  if (slot >= n) fail(Errc::index_out_of_range, "slot out of range");
  if (alpha.size() != n || beta.size() != n)
    fail(Errc::index_out_of_range, "multi-index length mismatch");
  for (std::size_t i = 0; i < n; ++i)
    if (i != slot && alpha[i] != beta[i])
      fail(Errc::indices_not_adjacent,
           "multi-indices differ away from the requested slot");

  const int dim = fam.dim();
  Mat head = Mat::Identity(dim, dim);  // H_1^{i-1}
  if (slot > 0) {
    head = fam.projection(slot - 1, alpha[slot - 1]);
    for (std::size_t i = slot - 1; i-- > 0;)
      head = head * fam.projection(i, alpha[i]);
  }
  Mat tail = Mat::Identity(dim, dim);  // H_{i+1}^{n}
  if (slot + 1 < n) tail = chain_operator(fam, alpha, slot + 1);

  Mat expr = head.adjoint() * fam.projection(slot, alpha[slot]) *
             tail.adjoint() * tail * fam.projection(slot, beta[slot]) * head;
  return state.expect(expr);
}

double sum_rule_defect(const DensityState& state, const HistoryFamily& fam,
                       std::size_t slot) {
  const std::size_t n = fam.slot_count();
  if (slot >= n) fail(Errc::index_out_of_range, "slot out of range");
  if (n == 1) {
    // deleting the only slot leaves the sure event
    double sum = 0.0;
    for (std::size_t a = 0; a < fam.shape()[0]; ++a)
      sum += history_probability(state, fam, {static_cast<int>(a)});
    return std::abs(sum - 1.0);
  }

  HistoryFamily reduced = fam.without_slot(slot);
  std::vector<std::size_t> rest_shape = reduced.shape();
  const std::size_t k_slot = fam.shape()[slot];

  double worst = 0.0;
  for_each_index(rest_shape, [&](const std::vector<int>& rest) {
    std::vector<int> alpha(n, 0);
    for (std::size_t i = 0, j = 0; i < n; ++i)
      if (i != slot) alpha[i] = rest[j++];
    double sum = 0.0;
    for (std::size_t a = 0; a < k_slot; ++a) {
      alpha[slot] = static_cast<int>(a);
      sum += history_probability(state, fam, alpha);
    }
    double reduced_prob = history_probability(state, reduced, rest);
    worst = std::max(worst, std::abs(sum - reduced_prob));
  });
  return worst;
}

ConsistencyReport delta_consistency(const HistoryFamily& fam) {
  const std::size_t n = fam.slot_count();
  ConsistencyReport report{1.0, 0.0, 0.0};
  if (n < 2) return report;

  for (std::size_t i = 0; i + 1 < n; ++i) {
    // the chain H_{i+1}^{n} depends only on the indices of slots i+1..n-1
    std::vector<std::size_t> tail_shape(fam.shape().begin() + i + 1,
                                        fam.shape().end());
    for_each_index(tail_shape, [&](const std::vector<int>& tail_idx) {
      std::vector<int> alpha(n, 0);
      for (std::size_t j = 0; j < tail_idx.size(); ++j)
        alpha[i + 1 + j] = tail_idx[j];
      Mat tail = chain_operator(fam, alpha, i + 1);
      Mat q = tail.adjoint() * tail;
      for (std::size_t a = 0; a < fam.shape()[i]; ++a) {
        const Mat& p = fam.projection(i, a);
        report.max_chain_commutator_norm = std::max(
            report.max_chain_commutator_norm, operator_norm(commutator(p, tail)));
        report.max_q_commutator_norm = std::max(
            report.max_q_commutator_norm, operator_norm(commutator(p, q)));
      }
    });
  }
  report.delta = 1.0 - report.max_chain_commutator_norm;
  return report;
}

double evidence(const DensityState& state, const HistoryFamily& fam,
                DecoherenceConvention convention, std::size_t cap) {
  DecoherenceMatrix p = decoherence_matrix(state, fam, convention, cap);
  return 1.0 - p.off_diagonal_norm();
}

DensityState lueders_update(const DensityState& state,
                            const ProjectiveResolution& resolution,
                            std::optional<std::size_t> observed) {
  if (state.dim() != resolution.dim())
    fail(Errc::dimension_mismatch, "state and resolution dimensions differ");
  if (observed) {
    if (*observed >= resolution.size())
      fail(Errc::index_out_of_range, "observed outcome out of range");
    const Mat& p = resolution.projections[*observed];
    double weight = state.expect_real(p);
    if (weight <= 1e-12)
      fail(Errc::zero_probability_branch,
           "conditioning on an outcome of probability <= 1e-12");
    return DensityState(hermitian_part(p * state.rho() * p) / weight);
  }
  Mat mixed = Mat::Zero(state.dim(), state.dim());
  for (const Mat& p : resolution.projections) mixed += p * state.rho() * p;
  return DensityState(hermitian_part(mixed));
}

}  // namespace qlab
