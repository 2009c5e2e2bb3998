#include "qlab/scenario.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>

#include "qlab/classical.hpp"
#include "qlab/empirical.hpp"
#include "qlab/errors.hpp"
#include "qlab/ndm.hpp"
#include "qlab/povm.hpp"
#include "qlab/random_models.hpp"

namespace qlab {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

using Status = ReportRecord::Status;

ReportRecord close_to(const std::string& name, double value, double expected,
                      double tol) {
  return ReportRecord::checked(name, value, std::abs(value - expected) <= tol,
                               tol);
}

ReportRecord at_most(const std::string& name, double value, double bound) {
  return ReportRecord::checked(name, value, value <= bound, bound);
}

ReportRecord at_least(const std::string& name, double value, double bound) {
  return ReportRecord::checked(name, value, value >= bound, bound);
}

// polarization filter at angle theta: projection onto (cos, sin)
Mat filter_projection(double theta) {
  Vec dir(2);
  dir << std::cos(theta), std::sin(theta);
  return dir * dir.adjoint();
}

ProjectiveResolution filter_resolution(double theta, const std::string& label) {
  Mat plus = filter_projection(theta);
  ProjectiveResolution res;
  res.label = label;
  res.projections = {plus, Mat::Identity(2, 2) - plus};
  return res;
}

HistoryFamily filter_family(const std::vector<double>& angles) {
  std::vector<HistorySlot> slots;
  for (std::size_t i = 0; i < angles.size(); ++i)
    slots.push_back({static_cast<double>(i + 1),
                     filter_resolution(angles[i], "filter" + std::to_string(i + 1))});
  return HistoryFamily(std::move(slots));
}

// ---------------------------------------------------------------------------
// parameter schema

struct ParamSpec {
  std::string name;
  bool required;
};

const std::vector<ParamSpec>& parameter_spec(ScenarioKind kind) {
  static const std::vector<ParamSpec> polarization = {{"angles", true}};
  static const std::vector<ParamSpec> zeno = {{"filters", true}};
  static const std::vector<ParamSpec> histories_audit = {
      {"dim", false},      {"slots", false},    {"outcomes", false},
      {"instances", false}, {"commuting", false}};
  static const std::vector<ParamSpec> empirical_scan = {
      {"weights", false}, {"steps", false}, {"delta", false}, {"draws", false}};
  static const std::vector<ParamSpec> ndm_ensemble = {
      {"phi", false},   {"p", false},     {"trajectories", false},
      {"k_max", false}, {"eta", false},   {"martingale_k", false},
      {"bound_k", false}};
  static const std::vector<ParamSpec> classical_oracle = {
      {"instances", false}, {"max_points", false}, {"max_slots", false}};
  switch (kind) {
    case ScenarioKind::polarization: return polarization;
    case ScenarioKind::zeno: return zeno;
    case ScenarioKind::histories_audit: return histories_audit;
    case ScenarioKind::empirical_scan: return empirical_scan;
    case ScenarioKind::ndm_ensemble: return ndm_ensemble;
    case ScenarioKind::classical_oracle: return classical_oracle;
  }
  fail(Errc::config_invalid, "unknown scenario kind");
}

std::optional<ScenarioKind> kind_from_name(const std::string& name) {
  for (const auto& info : list_scenarios())
    if (info.name == name) return info.kind;
  return std::nullopt;
}

double param_number(const nlohmann::json& params, const std::string& key,
                    double fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_number())
    fail(Errc::config_invalid, "parameter '" + key + "' must be a number");
  return v.get<double>();
}

int param_int(const nlohmann::json& params, const std::string& key,
              int fallback, int lo, int hi) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_number_integer())
    fail(Errc::config_invalid, "parameter '" + key + "' must be an integer");
  int n = v.get<int>();
  if (n < lo || n > hi)
    fail(Errc::config_invalid, "parameter '" + key + "' out of range [" +
                                   std::to_string(lo) + ", " +
                                   std::to_string(hi) + "]");
  return n;
}

bool param_bool(const nlohmann::json& params, const std::string& key,
                bool fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_boolean())
    fail(Errc::config_invalid, "parameter '" + key + "' must be a boolean");
  return v.get<bool>();
}

// ---------------------------------------------------------------------------
// scenario implementations

void run_polarization(const ScenarioConfig& config, RunReport& report) {
  const auto& params = config.parameters;
  if (!params.contains("angles"))
    fail(Errc::config_invalid, "missing parameter 'angles'");
  const auto& raw = params.at("angles");
  if (!raw.is_array() || raw.size() != 3)
    fail(Errc::config_invalid, "'angles' must be an array of three entries");
  std::vector<double> angles;
  for (const auto& a : raw) angles.push_back(parse_angle(a));
  const double t12 = angles[0] - angles[1];
  const double t13 = angles[0] - angles[2];
  const double t23 = angles[1] - angles[2];

  DensityState unpolarized = DensityState::maximally_mixed(2);

  auto pair_family = [&](std::size_t i, std::size_t j) {
    std::vector<HistorySlot> slots = {
        {1.0, filter_resolution(angles[i], "first")},
        {2.0, filter_resolution(angles[j], "second")}};
    return HistoryFamily(std::move(slots));
  };

  // two-filter probabilities and the classical bound they would have to obey
  double lhs = history_probability(unpolarized, pair_family(0, 2), {0, 1});
  double rhs = history_probability(unpolarized, pair_family(0, 1), {0, 1}) +
               history_probability(unpolarized, pair_family(1, 2), {0, 1});
  double lhs_closed = 0.5 * std::sin(t13) * std::sin(t13);
  double rhs_closed = 0.5 * std::sin(t12) * std::sin(t12) +
                      0.5 * std::sin(t23) * std::sin(t23);
  report.records.push_back(close_to("lhs", lhs, lhs_closed, 1e-12));
  report.records.push_back(close_to("rhs", rhs, rhs_closed, 1e-12));
  report.records.push_back(
      ReportRecord::info("violation", lhs > rhs ? 1.0 : 0.0));

  HistoryFamily family = filter_family(angles);
  report.records.push_back(ReportRecord::info(
      "total_probability", total_probability(unpolarized, family)));
  report.records.push_back(ReportRecord::info(
      "sum_rule_defect_slot2", sum_rule_defect(unpolarized, family, 1)));

  Complex interference = interference_term(unpolarized, family, {0, 0, 1},
                                           {0, 1, 1}, 1);
  report.records.push_back(ReportRecord::info("interference_slot2",
                                              interference.real(),
                                              interference.imag()));

  DecoherenceMatrix dm = decoherence_matrix(unpolarized, family);
  dm.validate();
  Complex offdiag = dm.entries()(
      static_cast<Eigen::Index>(dm.flatten({0, 0, 1})),
      static_cast<Eigen::Index>(dm.flatten({0, 1, 1})));
  report.records.push_back(
      ReportRecord::info("decoherence_offdiag", offdiag.real(), offdiag.imag()));
  report.records.push_back(close_to("offdiag_equals_interference",
                                    std::abs(offdiag - interference), 0.0,
                                    1e-12));

  double e = evidence(unpolarized, family);
  report.records.push_back(
      ReportRecord::checked("evidence_below_one", e, e < 1.0, 1e-12));
  report.records.push_back(ReportRecord::info(
      "delta_consistency", delta_consistency(family).delta));

  // branch probabilities conditioned on passing the first filter
  DensityState conditioned =
      lueders_update(unpolarized, filter_resolution(angles[0], "first"), 0);
  Mat p2 = filter_projection(angles[1]);
  Mat p3 = filter_projection(angles[2]);
  Mat q2 = Mat::Identity(2, 2) - p2;
  Mat q3 = Mat::Identity(2, 2) - p3;
  PovmFamily branches;
  branches.label = "geiger";
  branches.elements = {p3 * p2, q3 * p2, q2};
  branches.validate();
  double p_pp = generalized_history_probability(conditioned, {branches}, {0});
  double p_mp = generalized_history_probability(conditioned, {branches}, {1});
  double p_mm = generalized_history_probability(conditioned, {branches}, {2});
  auto cos2 = [](double x) { return std::cos(x) * std::cos(x); };
  auto sin2 = [](double x) { return std::sin(x) * std::sin(x); };
  report.records.push_back(
      close_to("branch_plus_plus", p_pp, cos2(t12) * cos2(t23), 1e-12));
  report.records.push_back(
      close_to("branch_minus_plus", p_mp, cos2(t12) * sin2(t23), 1e-12));
  report.records.push_back(close_to("branch_minus_minus", p_mm, sin2(t12), 1e-12));
  report.records.push_back(
      close_to("branch_sum", p_pp + p_mp + p_mm, 1.0, 1e-12));

  // four-element square-root POVM: complete on both sides
  PovmFamily four;
  four.label = "filters23";
  four.elements = {p3 * p2, p3 * q2, q3 * p2, q3 * q2};
  PovmValidation v4 = validate_povm(four);
  report.records.push_back(
      at_most("povm4_completeness_defect", v4.completeness_defect, 1e-10));
  report.records.push_back(
      at_most("povm4_co_completeness_defect", v4.co_completeness_defect, 1e-10));

  // three-element family: complete, but sum X X^dagger differs from 1
  PovmValidation v3 = validate_povm(branches);
  report.records.push_back(
      at_most("povm3_completeness_defect", v3.completeness_defect, 1e-10));
  report.records.push_back(ReportRecord::info("povm3_co_completeness_defect",
                                              v3.co_completeness_defect));

  // virtual history through filters 2 and 3 only
  PovmFamily x2_only;
  x2_only.label = "virtual";
  x2_only.elements = {p3 * q2};
  double virtual_prob =
      (x2_only.elements[0] * unpolarized.rho() * x2_only.elements[0].adjoint())
          .trace()
          .real();
  std::vector<HistorySlot> virt = {{1.0, filter_resolution(angles[1], "f2")},
                                   {2.0, filter_resolution(angles[2], "f3")}};
  double two_slot = history_probability(unpolarized, HistoryFamily(virt), {1, 0});
  report.records.push_back(
      close_to("virtual_history_matches_two_slot",
               std::abs(virtual_prob - two_slot), 0.0, 1e-12));
}

void run_zeno(const ScenarioConfig& config, RunReport& report) {
  const auto& params = config.parameters;
  if (!params.contains("filters"))
    fail(Errc::config_invalid, "missing parameter 'filters'");
  const auto& raw = params.at("filters");
  if (!raw.is_array() || raw.empty())
    fail(Errc::config_invalid, "'filters' must be a non-empty array");
  std::vector<int> filter_counts;
  for (const auto& v : raw) {
    if (!v.is_number_integer() || v.get<int>() < 1)
      fail(Errc::config_invalid, "'filters' entries must be integers >= 1");
    filter_counts.push_back(v.get<int>());
  }

  Vec vertical(2);
  vertical << 1.0, 0.0;
  DensityState polarized = DensityState::pure(vertical);

  std::vector<double> chain_probs;
  for (int n : filter_counts) {
    std::vector<HistorySlot> slots;
    for (int j = 1; j <= n; ++j)
      slots.push_back({static_cast<double>(j),
                       filter_resolution(j * kPi / (2.0 * n), "f")});
    HistoryFamily chain(std::move(slots));
    std::vector<int> all_plus(static_cast<std::size_t>(n), 0);
    double p = history_probability(polarized, chain, all_plus);
    double closed = std::pow(std::cos(kPi / (2.0 * n)), 2.0 * n);
    chain_probs.push_back(p);
    report.records.push_back(
        close_to("zeno_chain_n" + std::to_string(n), p, closed, 1e-12));
  }

  bool monotone = true;
  for (std::size_t i = 0; i + 1 < chain_probs.size(); ++i)
    if (filter_counts[i] < filter_counts[i + 1] &&
        !(chain_probs[i] < chain_probs[i + 1] + 1e-15))
      monotone = false;
  report.records.push_back(ReportRecord::checked(
      "zeno_monotone", monotone ? 1.0 : 0.0, monotone, 0.0));

  // all filters but the last removed: a single filter at pi/2
  std::vector<HistorySlot> single = {{1.0, filter_resolution(kPi / 2.0, "last")}};
  double removed = history_probability(polarized, HistoryFamily(single), {0});
  report.records.push_back(close_to("zeno_removed_filters", removed, 0.0, 1e-12));
}

void run_histories_audit(const ScenarioConfig& config, RunReport& report) {
  const auto& params = config.parameters;
  int dim = param_int(params, "dim", 4, 2, 8);
  int slots = param_int(params, "slots", 3, 1, 4);
  int outcomes = param_int(params, "outcomes", 2, 2, 3);
  int instances = param_int(params, "instances", 100, 1, 100000);
  bool commuting = param_bool(params, "commuting", true);
  if (outcomes > dim)
    fail(Errc::config_invalid, "'outcomes' cannot exceed 'dim'");

  Rng rng(config.seed);
  double norm_defect = 0.0;
  double offdiag_max = 0.0;
  double evidence_min = 1.0;
  double sum_defect_max = 0.0;
  double delta_min = 1.0;

  for (int i = 0; i < instances; ++i) {
    DensityState state = random_density(rng, dim);
    HistoryFamily family = commuting
                               ? random_commuting_family(rng, dim, slots, outcomes)
                               : random_family(rng, dim, slots, outcomes);
    norm_defect = std::max(norm_defect,
                           std::abs(total_probability(state, family) - 1.0));
    DecoherenceMatrix dm = decoherence_matrix(state, family);
    dm.validate();
    offdiag_max = std::max(
        offdiag_max,
        (dm.entries() - dm.diagonal_part()).cwiseAbs().maxCoeff());
    evidence_min = std::min(evidence_min, 1.0 - dm.off_diagonal_norm());
    for (int s = 0; s < slots; ++s)
      sum_defect_max = std::max(
          sum_defect_max, sum_rule_defect(state, family, static_cast<std::size_t>(s)));
    delta_min = std::min(delta_min, delta_consistency(family).delta);
  }

  report.records.push_back(at_most("normalization_defect_max", norm_defect, 1e-10));
  if (commuting) {
    report.records.push_back(at_most("decoherence_offdiag_max", offdiag_max, 1e-12));
    report.records.push_back(
        close_to("evidence_min", evidence_min, 1.0, 1e-10));
    report.records.push_back(at_most("sum_rule_defect_max", sum_defect_max, 1e-12));
    report.records.push_back(close_to("delta_min", delta_min, 1.0, 1e-10));
  } else {
    report.records.push_back(ReportRecord::info("decoherence_offdiag_max", offdiag_max));
    report.records.push_back(ReportRecord::info("evidence_min", evidence_min));
    report.records.push_back(ReportRecord::info("sum_rule_defect_max", sum_defect_max));
    report.records.push_back(ReportRecord::info("delta_min", delta_min));
  }
}

void run_empirical_scan(const ScenarioConfig& config, RunReport& report) {
  const auto& params = config.parameters;
  std::vector<double> weights = {0.75, 0.25};
  if (params.contains("weights")) {
    weights.clear();
    for (const auto& w : params.at("weights")) {
      if (!w.is_number() || w.get<double>() < 0.0)
        fail(Errc::config_invalid, "'weights' must be non-negative numbers");
      weights.push_back(w.get<double>());
    }
    if (weights.size() != 2)
      fail(Errc::config_invalid, "'weights' must have two entries");
  }
  int steps = param_int(params, "steps", 41, 2, 100000);
  double delta = param_number(params, "delta", 0.05);
  int draws = param_int(params, "draws", 100, 1, 100000);
  if (delta < 0.0) fail(Errc::config_invalid, "'delta' must be non-negative");

  double wsum = weights[0] + weights[1];
  weights[0] /= wsum;
  weights[1] /= wsum;
  if (std::abs(weights[0] - weights[1]) < 1e-6)
    fail(Errc::config_invalid,
         "'weights' must be distinct; the scan needs a non-degenerate state");
  DensityState state = DensityState::diagonal(weights);

  // generator rotating sigma_x into the sigma_z axis across t in [0, 1]
  Mat sigma_x(2, 2), sigma_y(2, 2);
  sigma_x << 0.0, 1.0, 1.0, 0.0;
  sigma_y << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  Mat h = (kPi / 4.0) * sigma_y;

  std::vector<double> grid(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i)
    grid[static_cast<std::size_t>(i)] = static_cast<double>(i) /
                                        static_cast<double>(steps - 1);
  Evolution evo = Evolution::from_generator(h, grid);
  Observable a = spectral_decompose(sigma_x);

  MeasurementScan scan =
      measurement_time_scan(a, evo, state, std::nullopt, grid, delta);
  report.records.push_back(
      close_to("scan_T_start", scan.variance_curve.front(), 1.0, 1e-10));
  report.records.push_back(
      close_to("scan_T_end", scan.variance_curve.back(), 0.0, 1e-10));

  bool monotone = true;
  for (std::size_t i = 0; i + 1 < scan.variance_curve.size(); ++i)
    if (scan.variance_curve[i + 1] > scan.variance_curve[i] + 1e-12)
      monotone = false;
  report.records.push_back(ReportRecord::checked(
      "scan_monotone", monotone ? 1.0 : 0.0, monotone, 1e-12));

  // closed form: T(t) = |cos(pi t / 2)|
  std::optional<double> t_star_closed;
  for (double t : grid)
    if (std::abs(std::cos(kPi * t / 2.0)) <= delta) {
      t_star_closed = t;
      break;
    }
  double got = scan.first_time ? *scan.first_time : -1.0;
  double want = t_star_closed ? *t_star_closed : -1.0;
  report.records.push_back(close_to("t_star", got, want, 1e-12));
  report.records.push_back(ReportRecord::checked(
      "state_in_set", in_state_set(scan, std::max(delta, 1e-9), 0.0) ? 1.0 : 0.0,
      in_state_set(scan, std::max(delta, 1e-9), 0.0), 0.0));

  // at t = 1 the observable has rotated onto the state's eigenbasis, so the
  // detector curves hit 1 - p_i exactly
  for (std::size_t i = 0; i < scan.detector_curves.size(); ++i) {
    double end_value = scan.detector_curves[i].back();
    double expected = 1.0 - weights[i];
    report.records.push_back(close_to(
        "detector_end_outcome" + std::to_string(i), end_value, expected, 1e-9));
  }

  EmpiricalReport at_end = empirical_property_check(
      a, evo, state, BlockAlgebra::full(2), 1.0, delta);
  report.records.push_back(ReportRecord::checked(
      "empirical_at_end", at_end.variance, at_end.is_empirical, delta));

  // randomized conditional-expectation identities
  Rng rng(config.seed);
  double b11_max = 0.0, module_max = 0.0, tracial_max = 0.0;
  double bound_margin_min = std::numeric_limits<double>::infinity();
  for (int d = 0; d < draws; ++d) {
    int dim = 3 + static_cast<int>(rng.index(3));  // 3..5
    DensityState rho = random_density(rng, dim);
    CentralDecomposition decomp = central_decomposition(rho);
    Mat x = random_hermitian(rng, dim);

    Mat eps_x = conditional_expectation_centralizer(x, decomp);
    Mat dot_x = conditional_expectation_center(x, decomp);
    b11_max = std::max(b11_max,
                       std::abs((rho.expect(eps_x) - rho.expect(x))));
    b11_max = std::max(b11_max,
                       std::abs((rho.expect(dot_x) - rho.expect(x))));

    // centralizer elements: block-diagonal pinchings of random operators
    Mat ca = conditional_expectation_centralizer(random_hermitian(rng, dim), decomp);
    Mat cb = conditional_expectation_centralizer(random_hermitian(rng, dim), decomp);
    Mat lhs = conditional_expectation_centralizer(ca * x * cb, decomp);
    module_max = std::max(module_max,
                          (lhs - ca * eps_x * cb).cwiseAbs().maxCoeff());
    tracial_max = std::max(
        tracial_max, std::abs(rho.expect(ca * cb) - rho.expect(cb * ca)));

    Mat b = random_ginibre(rng, dim);
    double lhs_bound = std::abs(rho.expect(commutator(x, b)));
    double rhs_bound = 2.0 * variance(x, decomp) * operator_norm(b);
    bound_margin_min = std::min(bound_margin_min, rhs_bound - lhs_bound);
  }
  report.records.push_back(at_most("expectation_preservation_max", b11_max, 1e-12));
  report.records.push_back(at_most("module_property_max", module_max, 1e-10));
  report.records.push_back(at_most("traciality_max", tracial_max, 1e-10));
  report.records.push_back(at_least("variance_bound_margin_min",
                                    bound_margin_min, -1e-12));
}

void run_ndm_ensemble(const ScenarioConfig& config, RunReport& report) {
  const auto& params = config.parameters;
  double phi = params.contains("phi") ? parse_angle(params.at("phi")) : kPi / 3.0;
  std::vector<double> p = {0.5, 0.5};
  if (params.contains("p")) {
    p.clear();
    for (const auto& w : params.at("p")) {
      if (!w.is_number() || w.get<double>() < 0.0)
        fail(Errc::config_invalid, "'p' must be non-negative numbers");
      p.push_back(w.get<double>());
    }
    if (p.size() != 2)
      fail(Errc::config_invalid, "'p' must have two entries");
  }
  int trajectories = param_int(params, "trajectories", 10000, 1, 10000000);
  int k_max = param_int(params, "k_max", 200, 1, 100000);
  double eta = param_number(params, "eta", 1e-3);
  int martingale_k = param_int(params, "martingale_k", 6, 1, 12);
  int bound_k = param_int(params, "bound_k", 50, 1, 10000);

  NdmModel model = NdmModel::rotation(phi);
  Eigen::MatrixXd kernel = outcome_kernel(model);
  report.records.push_back(
      close_to("kernel_p0_given_0", kernel(0, 0), 1.0, 1e-12));
  report.records.push_back(close_to("kernel_p0_given_1", kernel(1, 0),
                                    std::cos(phi) * std::cos(phi), 1e-12));

  Complex factor = decoherence_factor(model, 0, 1);
  report.records.push_back(close_to("decoherence_factor_01",
                                    std::abs(factor), std::abs(std::cos(phi)),
                                    1e-12));

  // off-diagonal damping for an initial state with maximal coherence
  Vec plus(2);
  plus << 1.0, 1.0;
  DensityState coherent = DensityState::pure(plus);
  DecoherenceReport bound = decoherence_bound_check(model, coherent, bound_k);
  report.records.push_back(ReportRecord::info("mu", bound.mu));
  report.records.push_back(ReportRecord::checked(
      "mu_less_than_one", bound.mu, bound.mu_less_than_one, 1.0));
  report.records.push_back(
      at_most("damping_violation_max", bound.max_damping_violation, 1e-12));
  report.records.push_back(at_most("offdiagonal_expectation_max",
                                   bound.max_offdiagonal_expectation,
                                   std::pow(bound.mu, bound_k) + 1e-12));

  MartingaleReport martingale = martingale_check(model, p, martingale_k);
  report.records.push_back(
      at_most("martingale_defect_max", martingale.max_defect, 1e-10));
  report.records.push_back(at_most("posterior_route_difference_max",
                                   martingale.max_route_difference, 1e-12));

  CollapseStatistics stats = ensemble_collapse_statistics(
      model, p, trajectories, k_max, eta, config.seed, config.threads);
  report.records.push_back(ReportRecord::checked(
      "collapse_conclusive", stats.conclusive ? 1.0 : 0.0, stats.conclusive, 0.0));
  report.records.push_back(
      at_least("collapse_fraction", stats.collapse_fraction, 0.99));
  double n = static_cast<double>(trajectories);
  for (std::size_t a = 0; a < stats.target_frequency.size(); ++a) {
    double expected = p[a];
    double radius = 3.0 * std::sqrt(expected * (1.0 - expected) / n);
    report.records.push_back(close_to("target_frequency_" + std::to_string(a),
                                      stats.target_frequency[a], expected,
                                      radius));
  }
  report.records.push_back(ReportRecord::checked(
      "collapse_rate_negative", stats.rate, stats.rate < 0.0, 0.0));
  report.records.push_back(at_least("collapse_rate_r_squared",
                                    stats.r_squared, 0.9));
  report.records.push_back(ReportRecord::info(
      "unresolved_fraction",
      static_cast<double>(stats.unresolved) / n));
}

void run_classical_oracle(const ScenarioConfig& config, RunReport& report) {
  const auto& params = config.parameters;
  int instances = param_int(params, "instances", 200, 1, 100000);
  int max_points = param_int(params, "max_points", 6, 2, 16);
  int max_slots = param_int(params, "max_slots", 4, 1, 6);

  Rng rng(config.seed);
  double oracle_diff_max = 0.0;
  double embedded_defect_max = 0.0;
  int dirac_violations = 0;
  double classical_sum_rule_max = 0.0;

  for (int i = 0; i < instances; ++i) {
    RandomClassicalInstance inst = random_classical_instance(rng, max_points, max_slots);
    const int points = inst.model.num_points();

    // random mixed state and a Dirac state
    std::vector<double> weights(static_cast<std::size_t>(points));
    double total = 0.0;
    for (auto& w : weights) {
      w = rng.uniform() + 1e-3;
      total += w;
    }
    for (auto& w : weights) w /= total;
    ClassicalState mu{weights};
    ClassicalState dirac = ClassicalState::dirac(
        points, static_cast<int>(rng.index(static_cast<std::size_t>(points))));

    QuantumEmbedding embedding = embed_as_quantum(inst.model, mu);
    HistoryFamily family = embedding.history_family(inst.slots);
    std::vector<int> inside(inst.slots.size(), 0);

    double classical = classical_history_probability(mu, inst.model, inst.slots);
    double quantum = history_probability(embedding.state(), family, inside);
    oracle_diff_max = std::max(oracle_diff_max, std::abs(classical - quantum));

    for (std::size_t s = 0; s < inst.slots.size(); ++s)
      embedded_defect_max = std::max(
          embedded_defect_max, sum_rule_defect(embedding.state(), family, s));

    // classical sum rule: drop one slot and compare against the sum
    if (inst.slots.size() > 1) {
      auto reduced_slots = inst.slots;
      reduced_slots.erase(reduced_slots.begin());
      double dropped =
          classical_history_probability(mu, inst.model, reduced_slots);
      // complementary event for the first slot
      std::string comp_name = inst.slots[0].second;
      double with_outside = 0.0;
      {
        // P(first in event) + P(first outside event) over remaining slots
        double in_event = classical;
        // recompute with the complement by summing over points directly
        const double t0 = inst.model.grid().front();
        for (int x = 0; x < points; ++x) {
          if (mu.weights[static_cast<std::size_t>(x)] == 0.0) continue;
          int y0 = inst.model.flow(t0, inst.slots[0].first, x);
          if (inst.model.event(comp_name)[static_cast<std::size_t>(y0)]) continue;
          bool rest = true;
          for (std::size_t s = 1; s < inst.slots.size(); ++s) {
            int y = inst.model.flow(t0, inst.slots[s].first, x);
            if (!inst.model.event(inst.slots[s].second)[static_cast<std::size_t>(y)]) {
              rest = false;
              break;
            }
          }
          if (rest) with_outside += mu.weights[static_cast<std::size_t>(x)];
        }
        with_outside += in_event;
      }
      classical_sum_rule_max = std::max(classical_sum_rule_max,
                                        std::abs(with_outside - dropped));
    }

    // 0-1 law for the Dirac state, exact in floating point
    double dirac_classical =
        classical_history_probability(dirac, inst.model, inst.slots);
    QuantumEmbedding dirac_embedding = embed_as_quantum(inst.model, dirac);
    double dirac_quantum = history_probability(
        dirac_embedding.state(), dirac_embedding.history_family(inst.slots),
        inside);
    if (dirac_classical != 0.0 && dirac_classical != 1.0) ++dirac_violations;
    if (dirac_quantum != 0.0 && dirac_quantum != 1.0) ++dirac_violations;
    if (dirac_classical != dirac_quantum) ++dirac_violations;
  }

  report.records.push_back(at_most("oracle_diff_max", oracle_diff_max, 1e-12));
  report.records.push_back(
      at_most("embedded_sum_rule_defect_max", embedded_defect_max, 1e-12));
  report.records.push_back(
      at_most("classical_sum_rule_max", classical_sum_rule_max, 1e-15));
  report.records.push_back(ReportRecord::checked(
      "dirac_01_violations", static_cast<double>(dirac_violations),
      dirac_violations == 0, 0.0));
}

}  // namespace

const char* scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::polarization: return "polarization";
    case ScenarioKind::zeno: return "zeno";
    case ScenarioKind::histories_audit: return "histories_audit";
    case ScenarioKind::empirical_scan: return "empirical_scan";
    case ScenarioKind::ndm_ensemble: return "ndm_ensemble";
    case ScenarioKind::classical_oracle: return "classical_oracle";
  }
  return "unknown";
}

std::vector<ScenarioInfo> list_scenarios() {
  return {
      {ScenarioKind::polarization, "polarization",
       "Three-filter photon polarization: pairwise probabilities, the "
       "violated classical bound, interference, decoherence matrix and the "
       "branch POVM",
       {"angles"},
       {}},
      {ScenarioKind::zeno, "zeno",
       "Chain of slightly rotated filters: joint transmission probability "
       "against the closed form, monotonicity, and the removed-filters "
       "variant",
       {"filters"},
       {}},
      {ScenarioKind::histories_audit, "histories_audit",
       "Randomized audit of history probabilities: normalization, "
       "decoherence-matrix structure, sum rules and consistency diagnostics",
       {},
       {"dim", "slots", "outcomes", "instances", "commuting"}},
      {ScenarioKind::empirical_scan, "empirical_scan",
       "Two-level measurement-time scan: variance curve, first crossing, "
       "detector curves, and conditional-expectation identities",
       {},
       {"weights", "steps", "delta", "draws"}},
      {ScenarioKind::ndm_ensemble, "ndm_ensemble",
       "Repeated-probe indirect measurement: outcome kernel, decoherence "
       "bound, martingale checks and Monte Carlo collapse statistics",
       {},
       {"phi", "p", "trajectories", "k_max", "eta", "martingale_k", "bound_k"}},
      {ScenarioKind::classical_oracle, "classical_oracle",
       "Random finite classical models against their diagonal quantum "
       "embeddings: probabilities, sum rules and 0-1 laws",
       {},
       {"instances", "max_points", "max_slots"}},
  };
}

double parse_angle(const nlohmann::json& value) {
  if (value.is_number()) return value.get<double>();
  if (!value.is_string())
    fail(Errc::config_invalid, "angle must be a number or a string");
  std::string s = value.get<std::string>();
  std::string original = s;
  // strip whitespace
  std::string compact;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
  s = compact;
  if (s.empty()) fail(Errc::config_invalid, "empty angle string");

  double sign = 1.0;
  std::size_t pos = 0;
  if (s[pos] == '+' || s[pos] == '-') {
    if (s[pos] == '-') sign = -1.0;
    ++pos;
  }
  // leading coefficient (optional)
  std::size_t digits_begin = pos;
  while (pos < s.size() &&
         (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.'))
    ++pos;
  double coeff = 1.0;
  bool has_coeff = pos > digits_begin;
  if (has_coeff) coeff = std::stod(s.substr(digits_begin, pos - digits_begin));

  bool has_pi = false;
  if (s.compare(pos, 2, "pi") == 0) {
    has_pi = true;
    pos += 2;
  }
  double denom = 1.0;
  if (pos < s.size() && s[pos] == '/') {
    ++pos;
    std::size_t denom_begin = pos;
    while (pos < s.size() &&
           (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.'))
      ++pos;
    if (pos == denom_begin)
      fail(Errc::config_invalid, "bad angle '" + original + "'");
    denom = std::stod(s.substr(denom_begin, pos - denom_begin));
    if (denom == 0.0) fail(Errc::config_invalid, "zero denominator in angle");
  }
  if (pos != s.size() || (!has_coeff && !has_pi))
    fail(Errc::config_invalid, "bad angle '" + original + "'");
  return sign * coeff * (has_pi ? kPi : 1.0) / denom;
}

std::vector<std::string> validate_config(const nlohmann::json& doc) {
  std::vector<std::string> issues;
  if (!doc.is_object()) {
    issues.push_back("config must be a JSON object");
    return issues;
  }
  static const std::set<std::string> top_keys = {"scenario", "parameters",
                                                 "seed", "threads", "output"};
  for (const auto& [key, value] : doc.items())
    if (!top_keys.count(key)) issues.push_back("unknown key '" + key + "'");

  if (!doc.contains("scenario") || !doc.at("scenario").is_string()) {
    issues.push_back("missing or non-string 'scenario'");
    return issues;
  }
  auto kind = kind_from_name(doc.at("scenario").get<std::string>());
  if (!kind) {
    issues.push_back("unknown scenario '" +
                     doc.at("scenario").get<std::string>() + "'");
    return issues;
  }

  nlohmann::json params =
      doc.contains("parameters") ? doc.at("parameters") : nlohmann::json::object();
  if (!params.is_object()) {
    issues.push_back("'parameters' must be an object");
    return issues;
  }
  const auto& spec = parameter_spec(*kind);
  for (const auto& p : spec)
    if (p.required && !params.contains(p.name))
      issues.push_back("missing parameter '" + p.name + "'");
  for (const auto& [key, value] : params.items()) {
    bool known = false;
    for (const auto& p : spec)
      if (p.name == key) known = true;
    if (!known) issues.push_back("unknown parameter '" + key + "'");
  }

  if (doc.contains("seed") && !doc.at("seed").is_number_unsigned())
    issues.push_back("'seed' must be an unsigned integer");
  if (doc.contains("threads") &&
      (!doc.at("threads").is_number_integer() || doc.at("threads").get<int>() < 1))
    issues.push_back("'threads' must be a positive integer");
  if (doc.contains("output")) {
    const auto& out = doc.at("output");
    if (!out.is_object()) {
      issues.push_back("'output' must be an object");
    } else {
      for (const auto& [key, value] : out.items())
        if (key != "path" && key != "format")
          issues.push_back("unknown output key '" + key + "'");
      if (out.contains("format")) {
        std::string f = out.at("format").is_string()
                            ? out.at("format").get<std::string>()
                            : std::string();
        if (f != "json" && f != "csv")
          issues.push_back("'output.format' must be 'json' or 'csv'");
      }
      if (out.contains("path") && !out.at("path").is_string())
        issues.push_back("'output.path' must be a string");
    }
  }

  // structural range checks that need no numerics
  if (issues.empty()) {
    try {
      if (*kind == ScenarioKind::zeno && params.contains("filters")) {
        const auto& f = params.at("filters");
        if (!f.is_array() || f.empty()) {
          issues.push_back("'filters' must be a non-empty array");
        } else {
          for (const auto& v : f)
            if (!v.is_number_integer() || v.get<int>() < 1)
              issues.push_back("'filters' entries must be integers >= 1");
        }
      }
      if (*kind == ScenarioKind::polarization && params.contains("angles")) {
        const auto& a = params.at("angles");
        if (!a.is_array() || a.size() != 3)
          issues.push_back("'angles' must be an array of three entries");
        else
          for (const auto& v : a) parse_angle(v);
      }
    } catch (const Error& e) {
      issues.push_back(e.what());
    }
  }
  return issues;
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& doc) {
  auto issues = validate_config(doc);
  if (!issues.empty()) {
    std::string joined;
    for (const auto& m : issues) {
      if (!joined.empty()) joined += "; ";
      joined += m;
    }
    fail(Errc::config_invalid, joined);
  }
  ScenarioConfig config;
  config.kind = *kind_from_name(doc.at("scenario").get<std::string>());
  config.parameters = doc.contains("parameters") ? doc.at("parameters")
                                                 : nlohmann::json::object();
  if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("threads")) config.threads = doc.at("threads").get<int>();
  if (doc.contains("output")) {
    const auto& out = doc.at("output");
    if (out.contains("path")) config.output_path = out.at("path").get<std::string>();
    if (out.contains("format"))
      config.format = out.at("format").get<std::string>() == "csv"
                          ? OutputFormat::csv
                          : OutputFormat::json;
  }
  return config;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_failure, "cannot open config file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config_invalid, std::string("config parse error: ") + e.what());
  }
  return from_json(doc);
}

nlohmann::json ScenarioConfig::to_json() const {
  nlohmann::json doc;
  doc["scenario"] = scenario_name(kind);
  doc["parameters"] = parameters;
  doc["seed"] = seed;
  doc["threads"] = threads;
  doc["output"] = {{"path", output_path},
                   {"format", format == OutputFormat::csv ? "csv" : "json"}};
  return doc;
}

RunReport run_scenario(const ScenarioConfig& config) {
  RunReport report;
  report.scenario = scenario_name(config.kind);
  report.seed = config.seed;
  // the echoed config leaves out the output block so the bytes of a report
  // do not depend on where it is written
  nlohmann::json echo;
  echo["scenario"] = scenario_name(config.kind);
  echo["parameters"] = config.parameters;
  echo["seed"] = config.seed;
  report.config_echo = std::move(echo);

  switch (config.kind) {
    case ScenarioKind::polarization: run_polarization(config, report); break;
    case ScenarioKind::zeno: run_zeno(config, report); break;
    case ScenarioKind::histories_audit: run_histories_audit(config, report); break;
    case ScenarioKind::empirical_scan: run_empirical_scan(config, report); break;
    case ScenarioKind::ndm_ensemble: run_ndm_ensemble(config, report); break;
    case ScenarioKind::classical_oracle: run_classical_oracle(config, report); break;
  }
  return report;
}

void write_report(const RunReport& report, const ScenarioConfig& config) {
  std::string payload = config.format == OutputFormat::csv ? report.to_csv()
                                                           : report.to_json();
  if (config.output_path == "-") {
    std::cout << payload;
    return;
  }
  std::ofstream out(config.output_path, std::ios::binary);
  if (!out) fail(Errc::io_failure, "cannot open '" + config.output_path + "'");
  out << payload;
  if (!out) fail(Errc::io_failure, "write failed for '" + config.output_path + "'");
}

}  // namespace qlab
