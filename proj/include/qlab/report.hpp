#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace qlab {

inline constexpr const char* kToolName = "qlab";
inline constexpr const char* kToolVersion = "1.0.0";

// One measured quantity in a run report. `pass`/`fail` records carry the
// tolerance they were judged against; `info` records are informational.
struct ReportRecord {
  enum class Status { pass, fail, info };

  std::string name;
  double value = 0.0;
  double value_imag = 0.0;
  std::optional<double> tolerance;
  Status status = Status::info;

  static ReportRecord info(std::string name, double value,
                           double imag = 0.0);
  static ReportRecord checked(std::string name, double value, bool ok,
                              double tolerance);
};

// Deterministic machine-readable run summary: identical config + seed +
// version yields byte-identical serializations. Wall-clock timing is
// deliberately not part of the report; the CLI logs it to stderr.
struct RunReport {
  std::string scenario;
  nlohmann::json config_echo;
  std::uint64_t seed = 0;
  std::vector<ReportRecord> records;

  bool all_passed() const;
  std::size_t failure_count() const;

  std::string to_json() const;
  std::string to_csv() const;
};

}  // namespace qlab
