#include "qlab/povm.hpp"

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

// random co-isometry family: X_a = U_a P_a over a random resolution
PovmFamily random_coisometry_family(Rng& rng, int dim, int outcomes) {
  Mat basis = random_unitary(rng, dim);
  ProjectiveResolution res = random_resolution(rng, basis, outcomes);
  PovmFamily fam;
  fam.label = "coisometry";
  for (const Mat& p : res.projections)
    fam.elements.push_back(random_unitary(rng, dim) * p);
  return fam;
}

}  // namespace

TEST_CASE("projective resolutions are complete on both sides") {
  PovmFamily fam = PovmFamily::from_resolution(filter(0.4));
  PovmValidation v = validate_povm(fam);
  CHECK(v.completeness_defect < 1e-12);
  CHECK(v.co_completeness_defect < 1e-12);
}

TEST_CASE("the four-element filter family is complete on both sides") {
  Mat p2 = tu::polar_projection(tu::kPi / 6.0);
  Mat p3 = tu::polar_projection(tu::kPi / 3.0);
  Mat q2 = Mat::Identity(2, 2) - p2;
  Mat q3 = Mat::Identity(2, 2) - p3;
  PovmFamily four;
  four.elements = {p3 * p2, p3 * q2, q3 * p2, q3 * q2};
  PovmValidation v = validate_povm(four);
  CHECK(v.completeness_defect < 1e-10);
  CHECK(v.co_completeness_defect < 1e-10);
}

TEST_CASE("the three-element family is complete but not co-complete") {
  Mat p2 = tu::polar_projection(tu::kPi / 6.0);
  Mat p3 = tu::polar_projection(tu::kPi / 3.0);
  Mat q2 = Mat::Identity(2, 2) - p2;
  Mat q3 = Mat::Identity(2, 2) - p3;
  PovmFamily three;
  three.elements = {p3 * p2, q3 * p2, q2};
  PovmValidation v = validate_povm(three);
  CHECK(v.completeness_defect < 1e-10);
  CHECK(v.co_completeness_defect > 1e-2);
}

TEST_CASE("projective POVMs reduce to history probabilities") {
  Rng rng(67);
  for (int trial = 0; trial < 20; ++trial) {
    int dim = 2 + static_cast<int>(rng.index(4));
    HistoryFamily fam = random_family(rng, dim, 2, 2);
    DensityState state = random_density(rng, dim);
    std::vector<PovmFamily> povms;
    for (std::size_t i = 0; i < fam.slot_count(); ++i)
      povms.push_back(PovmFamily::from_resolution(fam.slot(i).resolution));
    for (std::size_t flat = 0; flat < fam.history_count(); ++flat) {
      std::vector<int> alpha = fam.unflatten(flat);
      CHECK(std::abs(generalized_history_probability(state, povms, alpha) -
                     history_probability(state, fam, alpha)) < 1e-12);
    }
  }
}

TEST_CASE("identity POVM slots always fire") {
  DensityState state = DensityState::maximally_mixed(3);
  std::vector<PovmFamily> slots = {PovmFamily::identity(3),
                                   PovmFamily::identity(3)};
  CHECK(generalized_history_probability(state, slots, {0, 0}) ==
        doctest::Approx(1.0));
}

TEST_CASE("virtual history through filters 2 and 3") {
  // X2 = P3+ P2- applied to the unpolarized state: 1/2 sin^2(pi/6) = 1/8
  Mat p2 = tu::polar_projection(tu::kPi / 6.0);
  Mat p3 = tu::polar_projection(tu::kPi / 3.0);
  Mat x2 = p3 * (Mat::Identity(2, 2) - p2);
  Mat rho = 0.5 * Mat::Identity(2, 2);
  double direct = (x2 * rho * x2.adjoint()).trace().real();
  CHECK(direct == doctest::Approx(1.0 / 8.0).epsilon(1e-12));

  HistoryFamily two({{1.0, filter(tu::kPi / 6.0)}, {2.0, filter(tu::kPi / 3.0)}});
  CHECK(history_probability(DensityState::maximally_mixed(2), two, {1, 0}) ==
        doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("experiment success defect") {
  SUBCASE("projective commuting slots have no defect") {
    Rng rng(71);
    HistoryFamily fam = random_commuting_family(rng, 4, 3, 2);
    DensityState state = random_density(rng, 4);
    std::vector<PovmFamily> povms;
    for (std::size_t i = 0; i < fam.slot_count(); ++i)
      povms.push_back(PovmFamily::from_resolution(fam.slot(i).resolution));
    for (std::size_t slot = 0; slot < povms.size(); ++slot)
      CHECK(experiment_success_defect(state, povms, slot) < 1e-12);
  }
  SUBCASE("phase co-isometries over a decohered state pass") {
    // X_a = e^{i theta_a} P_a leaves sum_a X_a rho X_a^dagger = rho for
    // diagonal rho, so the following slot sees no disturbance
    Mat d0 = Mat::Zero(2, 2), d1 = Mat::Zero(2, 2);
    d0(0, 0) = 1.0;
    d1(1, 1) = 1.0;
    PovmFamily phases;
    phases.elements = {Complex(std::cos(0.4), std::sin(0.4)) * d0,
                       Complex(std::cos(1.1), std::sin(1.1)) * d1};
    PovmFamily follow = PovmFamily::from_resolution(filter(0.9));
    Mat rho = Mat::Zero(2, 2);
    rho(0, 0) = 0.6;
    rho(1, 1) = 0.4;
    DensityState state{Mat(rho)};
    CHECK(experiment_success_defect(state, {phases, follow}, 0) < 1e-8);
  }
  SUBCASE("polarization middle slot reproduces the history defect") {
    DensityState unpolarized = DensityState::maximally_mixed(2);
    std::vector<PovmFamily> povms = {
        PovmFamily::from_resolution(filter(0.0)),
        PovmFamily::from_resolution(filter(tu::kPi / 6.0)),
        PovmFamily::from_resolution(filter(tu::kPi / 3.0))};
    HistoryFamily fam({{1.0, filter(0.0)},
                       {2.0, filter(tu::kPi / 6.0)},
                       {3.0, filter(tu::kPi / 3.0)}});
    double povm_defect = experiment_success_defect(unpolarized, povms, 1);
    double hist_defect = sum_rule_defect(unpolarized, fam, 1);
    CHECK(povm_defect == doctest::Approx(hist_defect).epsilon(1e-12));
    CHECK(povm_defect == doctest::Approx(3.0 / 16.0).epsilon(1e-12));
  }
}

TEST_CASE("build_sequential_povm") {
  ProjectiveResolution first = filter(0.2);
  ProjectiveResolution second = filter(1.0);

  SUBCASE("good set covering everything gives the two-slot chain") {
    PovmFamily fam = build_sequential_povm(first, 1.0, second, 2.0, {0, 1});
    CHECK(fam.elements.size() == 4);
    CHECK(validate_povm(fam).completeness_defect < 1e-10);
    CHECK((fam.elements[0] - second.projections[0] * first.projections[0])
              .cwiseAbs()
              .maxCoeff() < 1e-14);
  }
  SUBCASE("empty good set returns the first resolution") {
    PovmFamily fam = build_sequential_povm(first, 1.0, second, 2.0, {});
    CHECK(fam.elements.size() == 2);
    CHECK((fam.elements[0] - first.projections[0]).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(validate_povm(fam).completeness_defect < 1e-12);
  }
  SUBCASE("branch-dependent second times with an evolution") {
    tu::Gen gen(73);
    Mat h = tu::hermitian(gen, 2);
    Evolution evo = Evolution::from_generator(h, {0.0, 1.0, 2.0, 3.0});
    std::map<int, double> times = {{0, 2.0}};
    PovmFamily fam =
        build_sequential_povm(first, 1.0, second, times, {0}, &evo);
    CHECK(fam.elements.size() == 3);
    CHECK(validate_povm(fam).completeness_defect < 1e-10);
  }
  SUBCASE("invalid good set is rejected") {
    CHECK_THROWS_AS(build_sequential_povm(first, 1.0, second, 2.0, {5}), Error);
  }
  SUBCASE("assembly from explicit parts") {
    std::map<int, std::vector<Mat>> parts = {
        {0, {second.projections[0], second.projections[1]}}};
    PovmFamily fam = build_sequential_povm_from_parts(first.projections, parts);
    CHECK(fam.elements.size() == 3);
    CHECK(validate_povm(fam).completeness_defect < 1e-10);
  }
}

TEST_CASE("generalized history probabilities sum to one") {
  Rng rng(79);
  for (int trial = 0; trial < 20; ++trial) {
    int dim = 2 + static_cast<int>(rng.index(3));
    std::vector<PovmFamily> slots;
    int n_slots = 1 + static_cast<int>(rng.index(3));
    for (int i = 0; i < n_slots; ++i)
      slots.push_back(random_coisometry_family(rng, dim, 2));
    DensityState state = random_density(rng, dim);

    std::vector<int> alpha(static_cast<std::size_t>(n_slots), 0);
    double total = 0.0;
    while (true) {
      total += generalized_history_probability(state, slots, alpha);
      int pos = n_slots - 1;
      while (pos >= 0) {
        if (++alpha[static_cast<std::size_t>(pos)] < 2) break;
        alpha[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
    CHECK(std::abs(total - 1.0) < 1e-10);
  }
}
