#include "qlab/histories.hpp"

#include <cmath>

#include "doctest.h"
#include "qlab/errors.hpp"
#include "qlab/random_models.hpp"
#include "test_util.hpp"

using namespace qlab;
namespace tu = testutil;

namespace {

ProjectiveResolution filter(double theta) {
  ProjectiveResolution res;
  res.label = "filter";
  Mat plus = tu::polar_projection(theta);
  res.projections = {plus, Mat::Identity(2, 2) - plus};
  return res;
}

// the worked three-filter family at angles 0, pi/6, pi/3
HistoryFamily polarization_family() {
  return HistoryFamily({{1.0, filter(0.0)},
                        {2.0, filter(tu::kPi / 6.0)},
                        {3.0, filter(tu::kPi / 3.0)}});
}

// independent oracle: probability of a +/- assignment through explicit 2x2
// matrix chains, written directly against Eigen
double chain_probability_oracle(const std::vector<double>& angles,
                                const std::vector<int>& signs,
                                const Mat& rho) {
  Mat chain = Mat::Identity(2, 2);
  for (std::size_t i = 0; i < angles.size(); ++i) {
    Mat p = tu::polar_projection(angles[i]);
    if (signs[i] == 1) p = Mat::Identity(2, 2) - p;
    chain = p * chain;
  }
  return (chain * rho * chain.adjoint()).trace().real();
}

}  // namespace

TEST_CASE("resolution validation catches broken families") {
  ProjectiveResolution bad;
  bad.projections = {tu::polar_projection(0.0), tu::polar_projection(0.3)};
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_NOTHROW(filter(0.3).validate());
}

TEST_CASE("chain operator of the trivial resolution is the identity") {
  HistoryFamily fam({{1.0, ProjectiveResolution::trivial(3)}});
  Mat h = chain_operator(fam, {0});
  CHECK((h - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("chain operator for two polarization filters") {
  HistoryFamily fam({{1.0, filter(0.0)}, {2.0, filter(tu::kPi / 6.0)}});
  Mat h = chain_operator(fam, {0, 0});
  // column norm^2 through the two rank-1 projections is cos^2(pi/6)
  double cos2 = std::cos(tu::kPi / 6.0) * std::cos(tu::kPi / 6.0);
  Vec e0(2);
  e0 << 1.0, 0.0;
  CHECK((h * e0).squaredNorm() == doctest::Approx(cos2).epsilon(1e-12));
}

TEST_CASE("commuting diagonal chains multiply to the intersection") {
  Mat d1 = Mat::Zero(3, 3), d2 = Mat::Zero(3, 3);
  d1(0, 0) = d1(1, 1) = 1.0;
  d2(1, 1) = d2(2, 2) = 1.0;
  ProjectiveResolution r1, r2;
  r1.projections = {d1, Mat::Identity(3, 3) - d1};
  r2.projections = {d2, Mat::Identity(3, 3) - d2};
  HistoryFamily fam({{1.0, r1}, {2.0, r2}});
  Mat h = chain_operator(fam, {0, 0});
  Mat want = Mat::Zero(3, 3);
  want(1, 1) = 1.0;  // intersection of the two subsets
  CHECK((h - want).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("history probability of the all-identity history is one") {
  HistoryFamily fam({{1.0, ProjectiveResolution::trivial(4)},
                     {2.0, ProjectiveResolution::trivial(4)}});
  DensityState state = DensityState::maximally_mixed(4);
  CHECK(history_probability(state, fam, {0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("unpolarized photon through two filters: 1/2 cos^2") {
  DensityState unpolarized = DensityState::maximally_mixed(2);
  HistoryFamily plus12({{1.0, filter(0.0)}, {2.0, filter(tu::kPi / 6.0)}});
  CHECK(history_probability(unpolarized, plus12, {0, 0}) ==
        doctest::Approx(0.375).epsilon(1e-12));  // 1/2 cos^2(pi/6) = 3/8

  HistoryFamily plus1_minus3({{1.0, filter(0.0)}, {2.0, filter(tu::kPi / 3.0)}});
  CHECK(history_probability(unpolarized, plus1_minus3, {0, 1}) ==
        doctest::Approx(0.375).epsilon(1e-12));  // 1/2 sin^2(pi/3) = 3/8
}

TEST_CASE("total probability sums to one") {
  DensityState unpolarized = DensityState::maximally_mixed(2);
  HistoryFamily fam = polarization_family();
  CHECK(std::abs(total_probability(unpolarized, fam) - 1.0) < 1e-10);

  // cross-check the 8-history sum against the independent oracle
  std::vector<double> angles = {0.0, tu::kPi / 6.0, tu::kPi / 3.0};
  double oracle = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        oracle += chain_probability_oracle(angles, {a, b, c},
                                           0.5 * Mat::Identity(2, 2));
  CHECK(oracle == doctest::Approx(1.0).epsilon(1e-12));

  HistoryFamily single({{1.0, filter(0.7)}});
  CHECK(std::abs(total_probability(unpolarized, single) - 1.0) < 1e-12);
}

TEST_CASE("decoherence matrix of a commuting family is diagonal") {
  Rng rng(5);
  HistoryFamily fam = random_commuting_family(rng, 4, 3, 2);
  DensityState state = random_density(rng, 4);
  DecoherenceMatrix dm = decoherence_matrix(state, fam);
  dm.validate();
  CHECK((dm.entries() - dm.diagonal_part()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("polarization decoherence matrix: diagonal and the worked off-diagonal") {
  DensityState unpolarized = DensityState::maximally_mixed(2);
  HistoryFamily fam = polarization_family();
  DecoherenceMatrix dm = decoherence_matrix(unpolarized, fam);
  dm.validate();

  // diagonal entries equal history probabilities
  for (std::size_t flat = 0; flat < dm.size(); ++flat) {
    double p = history_probability(unpolarized, fam, dm.unflatten(flat));
    CHECK(std::abs(dm.entries()(static_cast<Eigen::Index>(flat),
                                static_cast<Eigen::Index>(flat))
                       .real() -
                   p) < 1e-12);
  }

  // entry between (+,+,-) and (+,-,-) equals 3/32, derived by hand from the
  // 2x2 chain with angles (0, pi/6, pi/3)
  Complex entry = dm.entries()(
      static_cast<Eigen::Index>(dm.flatten({0, 0, 1})),
      static_cast<Eigen::Index>(dm.flatten({0, 1, 1})));
  CHECK(std::abs(entry - Complex(3.0 / 32.0, 0.0)) < 1e-12);

  // the final-slot-constrained variant zeroes cross-final entries
  DecoherenceMatrix constrained = decoherence_matrix(
      unpolarized, fam, DecoherenceConvention::final_slot_constrained);
  Complex masked = constrained.entries()(
      static_cast<Eigen::Index>(constrained.flatten({0, 0, 1})),
      static_cast<Eigen::Index>(constrained.flatten({0, 1, 0})));
  CHECK(std::abs(masked) == 0.0);
  Complex kept = constrained.entries()(
      static_cast<Eigen::Index>(constrained.flatten({0, 0, 1})),
      static_cast<Eigen::Index>(constrained.flatten({0, 1, 1})));
  CHECK(std::abs(kept - Complex(3.0 / 32.0, 0.0)) < 1e-12);
}

TEST_CASE("family size cap raises FamilyTooLarge") {
  DensityState state = DensityState::maximally_mixed(2);
  HistoryFamily fam = polarization_family();
  CHECK_THROWS_AS(decoherence_matrix(state, fam,
                                     DecoherenceConvention::unconstrained, 4),
                  Error);
}

TEST_CASE("interference term") {
  DensityState unpolarized = DensityState::maximally_mixed(2);
  HistoryFamily fam = polarization_family();

  SUBCASE("worked value 3/32 at the middle slot") {
    Complex i = interference_term(unpolarized, fam, {0, 0, 1}, {0, 1, 1}, 1);
    CHECK(std::abs(i - Complex(3.0 / 32.0, 0.0)) < 1e-12);
  }
  SUBCASE("commuting families have no interference") {
    Rng rng(9);
    HistoryFamily commuting = random_commuting_family(rng, 4, 3, 2);
    DensityState state = random_density(rng, 4);
    Complex i = interference_term(state, commuting, {0, 0, 1}, {0, 1, 1}, 1);
    CHECK(std::abs(i) < 1e-12);
  }
  SUBCASE("error paths") {
    CHECK_THROWS_AS(
        interference_term(unpolarized, fam, {0, 0, 1}, {1, 1, 1}, 1), Error);
    HistoryFamily single({{1.0, filter(0.0)}});
    CHECK_THROWS_AS(interference_term(unpolarized, single, {0}, {1}, 0), Error);
  }
}

TEST_CASE("sum rule defect") {
  DensityState unpolarized = DensityState::maximally_mixed(2);
  HistoryFamily fam = polarization_family();

  // middle slot: |3/32 + 3/32 - 3/8| = 3/16 for the (+, -) outer events, and
  // the same value for every other outer assignment
  CHECK(sum_rule_defect(unpolarized, fam, 1) ==
        doctest::Approx(3.0 / 16.0).epsilon(1e-12));

  // the last slot always collapses by completeness
  CHECK(sum_rule_defect(unpolarized, fam, 2) < 1e-12);

  Rng rng(31);
  HistoryFamily commuting = random_commuting_family(rng, 4, 3, 2);
  DensityState state = random_density(rng, 4);
  for (std::size_t slot = 0; slot < 3; ++slot)
    CHECK(sum_rule_defect(state, commuting, slot) < 1e-12);
}

TEST_CASE("delta consistency") {
  SUBCASE("commuting families are 1-consistent") {
    Rng rng(41);
    HistoryFamily commuting = random_commuting_family(rng, 4, 3, 2);
    ConsistencyReport report = delta_consistency(commuting);
    CHECK(report.delta == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(report.max_q_commutator_norm < 1e-10);
  }
  SUBCASE("polarization family against a direct commutator scan") {
    HistoryFamily fam = polarization_family();
    ConsistencyReport report = delta_consistency(fam);
    CHECK(report.delta < 1.0);

    // independent scan: rebuild every commutator from raw projections
    std::vector<double> angles = {0.0, tu::kPi / 6.0, tu::kPi / 3.0};
    std::vector<std::vector<Mat>> proj(3);
    for (int i = 0; i < 3; ++i) {
      Mat p = tu::polar_projection(angles[static_cast<std::size_t>(i)]);
      proj[static_cast<std::size_t>(i)] = {p, Mat::Identity(2, 2) - p};
    }
    double worst = 0.0;
    for (int i = 0; i < 2; ++i) {
      // chains over slots i+1..2
      std::vector<std::vector<int>> tails;
      if (i == 0) {
        for (int b = 0; b < 2; ++b)
          for (int c = 0; c < 2; ++c) tails.push_back({b, c});
      } else {
        for (int c = 0; c < 2; ++c) tails.push_back({c});
      }
      for (const auto& tail : tails) {
        Mat chain = Mat::Identity(2, 2);
        for (std::size_t k = 0; k < tail.size(); ++k) {
          std::size_t slot = static_cast<std::size_t>(i) + 1 + k;
          chain = proj[slot][static_cast<std::size_t>(tail[k])] * chain;
        }
        for (int a = 0; a < 2; ++a) {
          Mat comm = proj[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] * chain -
                     chain * proj[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
          worst = std::max(worst, tu::opnorm(comm));
        }
      }
    }
    CHECK(report.max_chain_commutator_norm ==
          doctest::Approx(worst).epsilon(1e-10));
  }
  SUBCASE("single-slot families are trivially consistent") {
    HistoryFamily single({{1.0, filter(0.3)}});
    CHECK(delta_consistency(single).delta == doctest::Approx(1.0));
  }
}

TEST_CASE("evidence") {
  DensityState unpolarized = DensityState::maximally_mixed(2);
  SUBCASE("commuting family") {
    Rng rng(43);
    HistoryFamily commuting = random_commuting_family(rng, 4, 3, 2);
    DensityState state = random_density(rng, 4);
    CHECK(std::abs(evidence(state, commuting) - 1.0) < 1e-12);
  }
  SUBCASE("polarization family sits strictly below one") {
    CHECK(evidence(unpolarized, polarization_family()) < 1.0);
  }
  SUBCASE("pure state on one history of a commuting family") {
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 1.0;
    ProjectiveResolution res;
    res.projections = {d, Mat::Identity(2, 2) - d};
    HistoryFamily fam({{1.0, res}, {2.0, res}});
    Vec e0(2);
    e0 << 1.0, 0.0;
    CHECK(std::abs(evidence(DensityState::pure(e0), fam) - 1.0) < 1e-12);
  }
}

TEST_CASE("evidence one forces vanishing sum rules") {
  Rng rng(47);
  for (int trial = 0; trial < 25; ++trial) {
    HistoryFamily fam = random_commuting_family(rng, 5, 3, 2);
    DensityState state = random_density(rng, 5);
    if (std::abs(evidence(state, fam) - 1.0) <= 1e-10) {
      for (std::size_t slot = 0; slot < 3; ++slot)
        CHECK(sum_rule_defect(state, fam, slot) <= 1e-8);
    }
  }
}

TEST_CASE("lueders update") {
  DensityState unpolarized = DensityState::maximally_mixed(2);
  ProjectiveResolution vertical = filter(0.0);

  SUBCASE("observed outcome gives the normalized compression") {
    DensityState updated = lueders_update(unpolarized, vertical, 0);
    Mat want = Mat::Zero(2, 2);
    want(0, 0) = 1.0;
    CHECK((updated.rho() - want).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("unread measurement leaves block-diagonal states unchanged") {
    Mat rho = Mat::Zero(2, 2);
    rho(0, 0) = 0.7;
    rho(1, 1) = 0.3;
    DensityState diag{Mat(rho)};
    DensityState mixed = lueders_update(diag, vertical, std::nullopt);
    CHECK((mixed.rho() - rho).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("mixture weights follow the Born rule") {
    Rng rng(53);
    DensityState state = random_density(rng, 4);
    Mat basis = random_unitary(rng, 4);
    ProjectiveResolution res = random_resolution(rng, basis, 3);
    DensityState mixed = lueders_update(state, res, std::nullopt);
    for (std::size_t i = 0; i < res.size(); ++i) {
      double before = state.expect_real(res.projections[i]);
      double after = mixed.expect_real(res.projections[i]);
      CHECK(std::abs(before - after) < 1e-12);
    }
  }
  SUBCASE("zero-probability branches are rejected") {
    Vec e0(2);
    e0 << 1.0, 0.0;
    DensityState pure = DensityState::pure(e0);
    CHECK_THROWS_AS(lueders_update(pure, vertical, 1), Error);
  }
}

TEST_CASE("normalization property over random families") {
  Rng rng(59);
  for (int trial = 0; trial < 100; ++trial) {
    int dim = 2 + static_cast<int>(rng.index(5));       // 2..6
    int slots = 1 + static_cast<int>(rng.index(4));     // 1..4
    int outcomes = 2 + static_cast<int>(rng.index(2));  // 2..3
    if (outcomes > dim) outcomes = dim;
    HistoryFamily fam = random_family(rng, dim, slots, outcomes);
    DensityState state = random_density(rng, dim);
    CHECK(std::abs(total_probability(state, fam) - 1.0) < 1e-10);
  }
}

TEST_CASE("zeno chain follows the closed form and grows with N") {
  Vec vertical(2);
  vertical << 1.0, 0.0;
  DensityState polarized = DensityState::pure(vertical);

  double previous = -1.0;
  for (int n : {1, 2, 3, 10, 50}) {
    std::vector<HistorySlot> slots;
    for (int j = 1; j <= n; ++j)
      slots.push_back({static_cast<double>(j), filter(j * tu::kPi / (2.0 * n))});
    HistoryFamily chain(std::move(slots));
    double p = history_probability(polarized, chain,
                                   std::vector<int>(static_cast<std::size_t>(n), 0));
    double closed = std::pow(std::cos(tu::kPi / (2.0 * n)), 2.0 * n);
    CHECK(std::abs(p - closed) < 1e-12);
    CHECK(p > previous);
    previous = p;
  }

  // N = 1 passes nothing; N = 3 gives 27/64
  std::vector<HistorySlot> three;
  for (int j = 1; j <= 3; ++j)
    three.push_back({static_cast<double>(j), filter(j * tu::kPi / 6.0)});
  CHECK(history_probability(polarized, HistoryFamily(std::move(three)), {0, 0, 0}) ==
        doctest::Approx(27.0 / 64.0).epsilon(1e-12));

  // with the intermediate filters removed only cos^2(pi/2) = 0 survives
  HistoryFamily last_only({{1.0, filter(tu::kPi / 2.0)}});
  CHECK(history_probability(polarized, last_only, {0}) < 1e-12);
}

TEST_CASE("small unitary perturbations keep commutators small") {
  Rng rng(61);
  HistoryFamily base = random_commuting_family(rng, 4, 3, 2);
  for (double eps : {1e-3, 1e-2}) {
    std::vector<HistorySlot> slots;
    for (std::size_t i = 0; i < base.slot_count(); ++i) {
      Mat k = random_hermitian(rng, 4);
      k /= operator_norm(k);
      Mat u = unitary_exp(k, eps);
      ProjectiveResolution res;
      for (std::size_t a = 0; a < base.slot(i).resolution.size(); ++a)
        res.projections.push_back(u * base.slot(i).resolution.projections[a] *
                                  u.adjoint());
      slots.push_back({base.slot(i).time, std::move(res)});
    }
    ConsistencyReport report = delta_consistency(HistoryFamily(std::move(slots)));
    CHECK(report.max_chain_commutator_norm <= 10.0 * eps);
  }
}
