#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "qlab/histories.hpp"

namespace qlab {

// Square root of a positive operator-valued measure: operators X_a with
// sum X_a^dagger X_a = 1. The POVM itself is {X_a^dagger X_a}.
struct PovmFamily {
  std::string label;
  std::vector<Mat> elements;

  static PovmFamily from_resolution(const ProjectiveResolution& res,
                                    std::string label = {});
  static PovmFamily identity(int dim);

  int dim() const {
    return elements.empty() ? 0 : static_cast<int>(elements[0].rows());
  }
  std::size_t size() const { return elements.size(); }

  void validate() const;  // completeness within 1e-10
};

struct PovmValidation {
  double completeness_defect;     // ||sum X^dagger X - 1||
  double co_completeness_defect;  // ||sum X X^dagger - 1||, may be large
};

PovmValidation validate_povm(const PovmFamily& fam);

// omega(X1^dagger ... Xn^dagger Xn ... X1) for one element per slot
double generalized_history_probability(const DensityState& state,
                                       const std::vector<PovmFamily>& slots,
                                       const std::vector<int>& alpha);

// max over the other slots' indices of
// |sum_{a_i} Prob - Prob with slot i removed|
double experiment_success_defect(const DensityState& state,
                                 const std::vector<PovmFamily>& slots,
                                 std::size_t slot);

// Sequential POVM for a second measurement that is possible only on the
// branches in `good`: elements P2_l(t2) P1_j(t1) for j in good (all l),
// and P1_i(t1) alone for i outside. Projections are Heisenberg-evolved when
// an evolution is supplied; branch-dependent second times are allowed.
PovmFamily build_sequential_povm(const ProjectiveResolution& first, double t1,
                                 const ProjectiveResolution& second, double t2,
                                 const std::set<int>& good,
                                 const Evolution* evo = nullptr);

PovmFamily build_sequential_povm(const ProjectiveResolution& first, double t1,
                                 const ProjectiveResolution& second,
                                 const std::map<int, double>& t2_by_branch,
                                 const std::set<int>& good,
                                 const Evolution* evo = nullptr);

// Assembles the family from explicit parts (e.g. sums of central-
// decomposition eigenprojections standing in for the slot projections).
// Completeness is reported by validate_povm, not enforced here.
PovmFamily build_sequential_povm_from_parts(
    const std::vector<Mat>& first_projections,
    const std::map<int, std::vector<Mat>>& second_by_branch);

}  // namespace qlab
