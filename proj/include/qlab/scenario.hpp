#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "qlab/report.hpp"

namespace qlab {

enum class ScenarioKind {
  polarization,
  zeno,
  histories_audit,
  empirical_scan,
  ndm_ensemble,
  classical_oracle,
};

const char* scenario_name(ScenarioKind kind);

struct ScenarioInfo {
  ScenarioKind kind;
  std::string name;
  std::string description;
  std::vector<std::string> required_parameters;
  std::vector<std::string> optional_parameters;
};

// catalog of the built-in scenarios
std::vector<ScenarioInfo> list_scenarios();

enum class OutputFormat { json, csv };

// Validated scenario configuration. Build from a JSON document of the form
//   { "scenario": "...", "seed": 42, "threads": 1,
//     "parameters": {...}, "output": {"path": "-", "format": "json"} }
// Angles may be given as numbers or as rational multiples of pi ("pi/6",
// "2pi/3", "-pi/4") to keep the exact worked examples free of decimal drift.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::polarization;
  nlohmann::json parameters;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output_path = "-";
  OutputFormat format = OutputFormat::json;

  static ScenarioConfig from_json(const nlohmann::json& doc);
  static ScenarioConfig from_file(const std::string& path);

  nlohmann::json to_json() const;
};

// Structural validation without running any numerics; returns one diagnostic
// string per problem, empty when the document is valid.
std::vector<std::string> validate_config(const nlohmann::json& doc);

// Executes the scenario and collects the report. Throws qlab::Error on
// configuration or I/O problems.
RunReport run_scenario(const ScenarioConfig& config);

// "pi/6", "2pi/3", "-pi/4", "pi", "0.25", 1.5 -> radians
double parse_angle(const nlohmann::json& value);

// Writes the report in the configured format; path "-" means stdout.
void write_report(const RunReport& report, const ScenarioConfig& config);

}  // namespace qlab
