#include "qlab/povm.hpp"

#include <algorithm>
#include <cmath>

#include "qlab/errors.hpp"

namespace qlab {

namespace {

constexpr double kCompletenessTol = 1e-10;

template <typename F>
void for_each_index(const std::vector<std::size_t>& shape, F&& f) {
  std::vector<int> idx(shape.size(), 0);
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

Mat slot_projection(const ProjectiveResolution& res, std::size_t outcome,
                    double t, const Evolution* evo) {
  const Mat& p = res.projections.at(outcome);
  if (!evo) return p;
  return heisenberg(p, *evo, t, evo->start());
}

}  // namespace

PovmFamily PovmFamily::from_resolution(const ProjectiveResolution& res,
                                       std::string label) {
  res.validate();
  PovmFamily out;
  out.label = label.empty() ? res.label : std::move(label);
  out.elements = res.projections;
  return out;
}

PovmFamily PovmFamily::identity(int dim) {
  PovmFamily out;
  out.label = "identity";
  out.elements.push_back(Mat::Identity(dim, dim));
  return out;
}

void PovmFamily::validate() const {
  if (elements.empty()) fail(Errc::invalid_resolution, "POVM has no elements");
  if (validate_povm(*this).completeness_defect > kCompletenessTol)
    fail(Errc::invalid_resolution, "POVM completeness fails: sum X^dagger X != 1");
}

PovmValidation validate_povm(const PovmFamily& fam) {
  if (fam.elements.empty())
    fail(Errc::invalid_resolution, "POVM has no elements");
  const int n = fam.dim();
  Mat sum = Mat::Zero(n, n);
  Mat co_sum = Mat::Zero(n, n);
  for (const Mat& x : fam.elements) {
    if (x.rows() != n || x.cols() != n)
      fail(Errc::dimension_mismatch, "POVM element dimension mismatch");
    sum += x.adjoint() * x;
    co_sum += x * x.adjoint();
  }
  Mat id = Mat::Identity(n, n);
  return {operator_norm(sum - id), operator_norm(co_sum - id)};
}

double generalized_history_probability(const DensityState& state,
                                       const std::vector<PovmFamily>& slots,
                                       const std::vector<int>& alpha) {
  if (slots.empty()) fail(Errc::invalid_argument, "no POVM slots");
  if (alpha.size() != slots.size())
    fail(Errc::index_out_of_range, "multi-index length mismatch");
  const int dim = slots.front().dim();
  if (state.dim() != dim)
    fail(Errc::dimension_mismatch, "state and POVM dimensions differ");

  Mat chain = Mat::Identity(dim, dim);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].dim() != dim)
      fail(Errc::dimension_mismatch, "POVM slot dimension mismatch");
    if (alpha[i] < 0 ||
        static_cast<std::size_t>(alpha[i]) >= slots[i].elements.size())
      fail(Errc::index_out_of_range, "outcome index out of range");
    chain = slots[i].elements[static_cast<std::size_t>(alpha[i])] * chain;
  }
  double p = (chain * state.rho() * chain.adjoint()).trace().real();
  if (p < -1e-12)
    fail(Errc::negative_probability,
         "generalized history probability " + std::to_string(p));
  return std::clamp(p, 0.0, 1.0);
}

double experiment_success_defect(const DensityState& state,
                                 const std::vector<PovmFamily>& slots,
                                 std::size_t slot) {
  if (slot >= slots.size()) fail(Errc::index_out_of_range, "slot out of range");
  std::vector<std::size_t> shape;
  for (const auto& s : slots) shape.push_back(s.elements.size());

  std::vector<PovmFamily> reduced;
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (i != slot) reduced.push_back(slots[i]);

  std::vector<std::size_t> rest_shape = shape;
  rest_shape.erase(rest_shape.begin() + static_cast<std::ptrdiff_t>(slot));

  double worst = 0.0;
  if (rest_shape.empty()) {
    double sum = 0.0;
    for (std::size_t a = 0; a < shape[slot]; ++a)
      sum += generalized_history_probability(state, slots,
                                             {static_cast<int>(a)});
    return std::abs(sum - 1.0);
  }
  for_each_index(rest_shape, [&](const std::vector<int>& rest) {
    std::vector<int> alpha(slots.size(), 0);
    for (std::size_t i = 0, j = 0; i < slots.size(); ++i)
      if (i != slot) alpha[i] = rest[j++];
    double sum = 0.0;
    for (std::size_t a = 0; a < shape[slot]; ++a) {
      alpha[slot] = static_cast<int>(a);
      sum += generalized_history_probability(state, slots, alpha);
    }
    double without = generalized_history_probability(state, reduced, rest);
    worst = std::max(worst, std::abs(sum - without));
  });
  return worst;
}

PovmFamily build_sequential_povm(const ProjectiveResolution& first, double t1,
                                 const ProjectiveResolution& second, double t2,
                                 const std::set<int>& good,
                                 const Evolution* evo) {
  std::map<int, double> times;
  for (int j : good) times[j] = t2;
  return build_sequential_povm(first, t1, second, times, good, evo);
}

PovmFamily build_sequential_povm(const ProjectiveResolution& first, double t1,
                                 const ProjectiveResolution& second,
                                 const std::map<int, double>& t2_by_branch,
                                 const std::set<int>& good,
                                 const Evolution* evo) {
  first.validate();
  second.validate();
  if (first.dim() != second.dim())
    fail(Errc::dimension_mismatch, "resolution dimensions differ");
  for (int j : good)
    if (j < 0 || static_cast<std::size_t>(j) >= first.size())
      fail(Errc::invalid_good_set, "good set index out of range");

  PovmFamily out;
  out.label = "sequential";
  for (int j : good) {
    auto it = t2_by_branch.find(j);
    if (it == t2_by_branch.end())
      fail(Errc::invalid_good_set, "missing second-measurement time for branch");
    if (!(it->second > t1))
      fail(Errc::invalid_argument, "second measurement must come after t1");
    Mat p1 = slot_projection(first, static_cast<std::size_t>(j), t1, evo);
    for (std::size_t l = 0; l < second.size(); ++l)
      out.elements.push_back(slot_projection(second, l, it->second, evo) * p1);
  }
  for (std::size_t i = 0; i < first.size(); ++i)
    if (!good.count(static_cast<int>(i)))
      out.elements.push_back(slot_projection(first, i, t1, evo));

  if (validate_povm(out).completeness_defect > kCompletenessTol)
    fail(Errc::invalid_resolution, "constructed POVM is not complete");
  return out;
}

PovmFamily build_sequential_povm_from_parts(
    const std::vector<Mat>& first_projections,
    const std::map<int, std::vector<Mat>>& second_by_branch) {
  if (first_projections.empty())
    fail(Errc::invalid_argument, "no first-slot projections");
  PovmFamily out;
  out.label = "sequential-parts";
  for (std::size_t i = 0; i < first_projections.size(); ++i) {
    auto it = second_by_branch.find(static_cast<int>(i));
    if (it == second_by_branch.end()) {
      out.elements.push_back(first_projections[i]);
      continue;
    }
    for (const Mat& p2 : it->second)
      out.elements.push_back(p2 * first_projections[i]);
  }
  return out;
}

}  // namespace qlab
