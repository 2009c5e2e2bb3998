#pragma once

#include <stdexcept>
#include <string>

namespace qlab {

// Failure modes of library operations. Every throwing path in qlab raises
// Error with one of these codes, so callers can branch without string
// matching.
enum class Errc {
  not_hermitian,
  not_unitary,
  not_a_state,
  decomposition_failure,
  time_not_on_grid,
  dimension_mismatch,
  index_out_of_range,
  family_too_large,
  indices_not_adjacent,
  zero_probability_branch,
  negative_probability,
  unknown_event,
  invalid_resolution,
  invalid_good_set,
  eigenvalue_gap_too_small,
  impossible_outcome,
  enumeration_too_large,
  empty_grid,
  invalid_argument,
  config_invalid,
  io_failure,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::not_hermitian: return "NotHermitian";
    case Errc::not_unitary: return "NotUnitary";
    case Errc::not_a_state: return "NotAState";
    case Errc::decomposition_failure: return "DecompositionFailure";
    case Errc::time_not_on_grid: return "TimeNotOnGrid";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::family_too_large: return "FamilyTooLarge";
    case Errc::indices_not_adjacent: return "IndicesNotAdjacentVariant";
    case Errc::zero_probability_branch: return "ZeroProbabilityBranch";
    case Errc::negative_probability: return "NegativeProbability";
    case Errc::unknown_event: return "UnknownEvent";
    case Errc::invalid_resolution: return "InvalidResolution";
    case Errc::invalid_good_set: return "InvalidGoodSet";
    case Errc::eigenvalue_gap_too_small: return "EigenvalueGapTooSmall";
    case Errc::impossible_outcome: return "ImpossibleOutcome";
    case Errc::enumeration_too_large: return "EnumerationTooLarge";
    case Errc::empty_grid: return "EmptyGrid";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::config_invalid: return "ConfigInvalid";
    case Errc::io_failure: return "IoFailure";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace qlab
