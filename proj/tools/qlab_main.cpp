// qlab: scenario runner for the measurement-theory library. Configs in,
// deterministic machine-readable reports out. Exit codes: 0 ok, 1 error,
// 2 at least one scenario-level check failed.

#include <chrono>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "qlab/errors.hpp"
#include "qlab/scenario.hpp"

namespace {

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<int> threads;
};

void apply_globals(qlab::ScenarioConfig& config, const GlobalFlags& flags) {
  if (flags.seed) config.seed = *flags.seed;
  if (flags.out) config.output_path = *flags.out;
  if (flags.format)
    config.format = (*flags.format == "csv") ? qlab::OutputFormat::csv
                                             : qlab::OutputFormat::json;
  if (flags.threads) config.threads = *flags.threads;
}

int execute(qlab::ScenarioConfig config, const GlobalFlags& flags) {
  apply_globals(config, flags);
  auto begin = std::chrono::steady_clock::now();
  qlab::RunReport report = qlab::run_scenario(config);
  auto end = std::chrono::steady_clock::now();
  qlab::write_report(report, config);
  // timing goes to stderr so report bytes stay deterministic
  std::chrono::duration<double> elapsed = end - begin;
  std::cerr << "qlab: " << report.scenario << " finished in " << elapsed.count()
            << " s, " << report.records.size() << " records, "
            << report.failure_count() << " failures\n";
  return report.all_passed() ? 0 : 2;
}

qlab::ScenarioConfig config_from_parts(const std::string& scenario,
                                       nlohmann::json parameters) {
  nlohmann::json doc;
  doc["scenario"] = scenario;
  doc["parameters"] = std::move(parameters);
  return qlab::ScenarioConfig::from_json(doc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-dimensional quantum measurement scenarios"};
  app.require_subcommand(1);

  GlobalFlags flags;
  app.add_option("--seed", flags.seed, "base seed for all randomized work");
  app.add_option("--out", flags.out, "report path ('-' for stdout)");
  app.add_option("--format", flags.format, "report format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--threads", flags.threads,
                 "worker threads (never changes results)")
      ->check(CLI::PositiveNumber);

  // run --config PATH
  auto* run_cmd = app.add_subcommand("run", "run a scenario from a JSON config");
  std::string config_path;
  run_cmd->add_option("--config", config_path, "path to the scenario config")
      ->required();

  auto* list_cmd = app.add_subcommand("list", "list available scenarios");

  auto* validate_cmd =
      app.add_subcommand("validate", "validate a config without running it");
  std::string validate_path;
  validate_cmd->add_option("--config", validate_path, "path to the config")
      ->required();

  // one subcommand per scenario with its own parameter flags
  auto* pol_cmd = app.add_subcommand("polarization", "three-filter example");
  std::vector<std::string> angles = {"0", "pi/6", "pi/3"};
  pol_cmd->add_option("--angles", angles,
                      "three filter angles (e.g. 0 pi/6 pi/3)")
      ->expected(3);

  auto* zeno_cmd = app.add_subcommand("zeno", "rotating filter chain");
  std::vector<int> filters = {1, 2, 3, 10, 100, 1000};
  zeno_cmd->add_option("--filters", filters, "filter counts to evaluate");

  auto* audit_cmd =
      app.add_subcommand("histories_audit", "randomized history audit");
  int dim = 4, slots = 3, outcomes = 2, instances = 100;
  bool noncommuting = false;
  audit_cmd->add_option("--dim", dim, "Hilbert space dimension");
  audit_cmd->add_option("--slots", slots, "measurement slots");
  audit_cmd->add_option("--outcomes", outcomes, "outcomes per slot");
  audit_cmd->add_option("--instances", instances, "random instances");
  audit_cmd->add_flag("--noncommuting", noncommuting,
                      "draw non-commuting families");

  auto* scan_cmd = app.add_subcommand("empirical_scan", "measurement-time scan");
  std::vector<double> weights = {0.75, 0.25};
  int steps = 41, draws = 100;
  double scan_delta = 0.05;
  scan_cmd->add_option("--weights", weights, "diagonal state weights")
      ->expected(2);
  scan_cmd->add_option("--steps", steps, "grid points");
  scan_cmd->add_option("--delta", scan_delta, "resolution threshold");
  scan_cmd->add_option("--draws", draws, "random draws for the identities");

  auto* ndm_cmd = app.add_subcommand("ndm_ensemble", "probe-chain ensemble");
  std::string phi = "pi/3";
  std::vector<double> prior = {0.5, 0.5};
  int trajectories = 10000, k_max = 200, martingale_k = 6, bound_k = 50;
  double eta = 1e-3;
  ndm_cmd->add_option("--phi", phi, "probe rotation angle");
  ndm_cmd->add_option("--p", prior, "initial diagonal weights")->expected(2);
  ndm_cmd->add_option("--trajectories", trajectories, "ensemble size");
  ndm_cmd->add_option("--k-max", k_max, "probe budget per trajectory");
  ndm_cmd->add_option("--eta", eta, "collapse threshold");
  ndm_cmd->add_option("--martingale-k", martingale_k, "enumeration depth");
  ndm_cmd->add_option("--bound-k", bound_k, "damping-check depth");

  auto* classical_cmd =
      app.add_subcommand("classical_oracle", "classical vs diagonal quantum");
  int cl_instances = 200, max_points = 6, max_slots = 4;
  classical_cmd->add_option("--instances", cl_instances, "random instances");
  classical_cmd->add_option("--max-points", max_points, "state-space cap");
  classical_cmd->add_option("--max-slots", max_slots, "slot cap");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed())
      return execute(qlab::ScenarioConfig::from_file(config_path), flags);

    if (list_cmd->parsed()) {
      for (const auto& info : qlab::list_scenarios()) {
        std::cout << info.name << ": " << info.description << "\n  required:";
        if (info.required_parameters.empty()) std::cout << " (none)";
        for (const auto& p : info.required_parameters) std::cout << ' ' << p;
        std::cout << "\n  optional:";
        if (info.optional_parameters.empty()) std::cout << " (none)";
        for (const auto& p : info.optional_parameters) std::cout << ' ' << p;
        std::cout << "\n";
      }
      return 0;
    }

    if (validate_cmd->parsed()) {
      std::ifstream in(validate_path);
      if (!in) {
        std::cerr << "qlab: cannot open '" << validate_path << "'\n";
        return 1;
      }
      nlohmann::json doc;
      try {
        in >> doc;
      } catch (const nlohmann::json::exception& e) {
        std::cerr << "qlab: parse error: " << e.what() << "\n";
        return 1;
      }
      auto issues = qlab::validate_config(doc);
      for (const auto& m : issues) std::cout << m << "\n";
      if (issues.empty()) std::cout << "config ok\n";
      return issues.empty() ? 0 : 1;
    }

    if (pol_cmd->parsed()) {
      nlohmann::json params;
      params["angles"] = angles;
      return execute(config_from_parts("polarization", params), flags);
    }
    if (zeno_cmd->parsed()) {
      nlohmann::json params;
      params["filters"] = filters;
      return execute(config_from_parts("zeno", params), flags);
    }
    if (audit_cmd->parsed()) {
      nlohmann::json params;
      params["dim"] = dim;
      params["slots"] = slots;
      params["outcomes"] = outcomes;
      params["instances"] = instances;
      params["commuting"] = !noncommuting;
      return execute(config_from_parts("histories_audit", params), flags);
    }
    if (scan_cmd->parsed()) {
      nlohmann::json params;
      params["weights"] = weights;
      params["steps"] = steps;
      params["delta"] = scan_delta;
      params["draws"] = draws;
      return execute(config_from_parts("empirical_scan", params), flags);
    }
    if (ndm_cmd->parsed()) {
      nlohmann::json params;
      params["phi"] = phi;
      params["p"] = prior;
      params["trajectories"] = trajectories;
      params["k_max"] = k_max;
      params["eta"] = eta;
      params["martingale_k"] = martingale_k;
      params["bound_k"] = bound_k;
      return execute(config_from_parts("ndm_ensemble", params), flags);
    }
    if (classical_cmd->parsed()) {
      nlohmann::json params;
      params["instances"] = cl_instances;
      params["max_points"] = max_points;
      params["max_slots"] = max_slots;
      return execute(config_from_parts("classical_oracle", params), flags);
    }
  } catch (const qlab::Error& e) {
    std::cerr << "qlab: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "qlab: unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
