#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qlab/operator_core.hpp"

namespace qlab {

// Complete family of mutually orthogonal projections (the alternative
// outcomes of one measurement slot).
struct ProjectiveResolution {
  std::string label;
  std::vector<Mat> projections;

  static ProjectiveResolution from_observable(const Observable& obs,
                                              std::string label = {});
  // {1} on the given dimension
  static ProjectiveResolution trivial(int dim);

  int dim() const {
    return projections.empty() ? 0 : static_cast<int>(projections[0].rows());
  }
  std::size_t size() const { return projections.size(); }

  void validate() const;  // orthogonality and completeness within 1e-10
};

struct HistorySlot {
  double time;
  ProjectiveResolution resolution;
};

// Time-ordered list of projective resolutions. When an Evolution is attached,
// each slot's projections are taken in the Heisenberg picture at the slot
// time (relative to the evolution's first grid point); otherwise they are
// used as given.
class HistoryFamily {
 public:
  explicit HistoryFamily(std::vector<HistorySlot> slots,
                         std::optional<Evolution> evolution = std::nullopt);

  int dim() const { return dim_; }
  std::size_t slot_count() const { return slots_.size(); }
  const HistorySlot& slot(std::size_t i) const { return slots_.at(i); }
  std::vector<std::size_t> shape() const;
  std::size_t history_count() const;

  // Heisenberg-evolved projection for (slot, outcome)
  const Mat& projection(std::size_t slot, std::size_t outcome) const;

  // codec between flat history index and per-slot multi-index
  // (lexicographic; the last slot varies fastest)
  std::size_t flatten(const std::vector<int>& alpha) const;
  std::vector<int> unflatten(std::size_t flat) const;

  HistoryFamily without_slot(std::size_t i) const;

 private:
  std::vector<HistorySlot> slots_;
  std::optional<Evolution> evolution_;
  std::vector<std::vector<Mat>> evolved_;
  int dim_ = 0;
};

// Ordered product of history projections from slot `from_slot` (0-based) to
// the last slot, later slots on the left.
Mat chain_operator(const HistoryFamily& fam, const std::vector<int>& alpha,
                   std::size_t from_slot = 0);

// trace(H rho H^dagger), clamped to [0,1] after a -1e-12 negativity check
double history_probability(const DensityState& state, const HistoryFamily& fam,
                           const std::vector<int>& alpha);

// sum of history_probability over all multi-indices
double total_probability(const DensityState& state, const HistoryFamily& fam);

// Which off-diagonal entries are computed: `unconstrained` fills the whole
// matrix; `final_slot_constrained` zeroes entries whose final-slot indices
// differ.
enum class DecoherenceConvention { unconstrained, final_slot_constrained };

class DecoherenceMatrix {
 public:
  DecoherenceMatrix(std::vector<std::size_t> shape, Mat entries,
                    DecoherenceConvention convention);

  const Mat& entries() const { return entries_; }
  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  DecoherenceConvention convention() const { return convention_; }

  std::size_t flatten(const std::vector<int>& alpha) const;
  std::vector<int> unflatten(std::size_t flat) const;

  Mat diagonal_part() const;
  // operator norm of the off-diagonal part
  double off_diagonal_norm() const;

  void validate() const;  // Hermitian, real non-negative diagonal, unit trace

 private:
  std::vector<std::size_t> shape_;
  Mat entries_;
  DecoherenceConvention convention_;
};

constexpr std::size_t kDefaultFamilyCap = 4096;

DecoherenceMatrix decoherence_matrix(
    const DensityState& state, const HistoryFamily& fam,
    DecoherenceConvention convention = DecoherenceConvention::unconstrained,
    std::size_t cap = kDefaultFamilyCap);

// omega(H_1^{i-1 dagger} P_a H_{i+1}^dagger H_{i+1} P_b H_1^{i-1}) for two
// multi-indices differing only at `slot`
Complex interference_term(const DensityState& state, const HistoryFamily& fam,
                          const std::vector<int>& alpha,
                          const std::vector<int>& beta, std::size_t slot);

// max over the other slots' indices of
// |sum_{a_i} Prob(alpha) - Prob(alpha with slot i removed)|
double sum_rule_defect(const DensityState& state, const HistoryFamily& fam,
                       std::size_t slot);

struct ConsistencyReport {
  double delta;                       // 1 - max ||[P, chain]||
  double max_chain_commutator_norm;   // over slots and multi-indices
  double max_q_commutator_norm;       // with Q = chain^dagger chain
};

ConsistencyReport delta_consistency(const HistoryFamily& fam);

// 1 - ||P - diag(P)|| for the decoherence matrix; 1 means the family's
// outcomes are mutually exclusive for all practical purposes
double evidence(const DensityState& state, const HistoryFamily& fam,
                DecoherenceConvention convention =
                    DecoherenceConvention::unconstrained,
                std::size_t cap = kDefaultFamilyCap);

// observed = none: sum_i P_i rho P_i (decohered mixture);
// observed = i: P_i rho P_i normalized by its Born weight
DensityState lueders_update(const DensityState& state,
                            const ProjectiveResolution& resolution,
                            std::optional<std::size_t> observed);

}  // namespace qlab
