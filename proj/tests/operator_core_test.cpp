#include "qlab/operator_core.hpp"

#include "doctest.h"
#include "qlab/errors.hpp"
#include "test_util.hpp"

using namespace qlab;
namespace tu = testutil;

namespace {

Mat diag3(double a, double b, double c) {
  Mat m = Mat::Zero(3, 3);
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  return m;
}

}  // namespace

TEST_CASE("spectral_decompose on a diagonal operator") {
  Observable obs = spectral_decompose(diag3(1.0, 1.0, 0.0), 1e-8);
  obs.validate();
  REQUIRE(obs.spectrum.size() == 2);
  CHECK(obs.spectrum[0].eigenvalue == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(obs.spectrum[1].eigenvalue == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((obs.spectrum[0].projection - diag3(1, 1, 0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((obs.spectrum[1].projection - diag3(0, 0, 1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spectral_decompose of pauli-x matches the closed form") {
  Observable obs = spectral_decompose(tu::pauli_x(), 1e-8);
  obs.validate();
  REQUIRE(obs.spectrum.size() == 2);
  CHECK(obs.spectrum[0].eigenvalue == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(obs.spectrum[1].eigenvalue == doctest::Approx(-1.0).epsilon(1e-12));
  Mat plus(2, 2), minus(2, 2);
  plus << 0.5, 0.5, 0.5, 0.5;
  minus << 0.5, -0.5, -0.5, 0.5;
  CHECK((obs.spectrum[0].projection - plus).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((obs.spectrum[1].projection - minus).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("near-degenerate eigenvalues are clustered") {
  Observable obs = spectral_decompose(diag3(1.0, 1.0 + 1e-12, 0.0), 1e-8);
  REQUIRE(obs.spectrum.size() == 2);
  CHECK(std::lround(obs.spectrum[0].projection.trace().real()) == 2);
}

TEST_CASE("spectral_decompose rejects non-Hermitian input") {
  Mat bad(2, 2);
  bad << 0.0, 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(spectral_decompose(bad, 1e-8), Error);
}

TEST_CASE("reconstruction property over random Hermitian operators") {
  tu::Gen gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    int dim = 2 + gen.integer(7);  // 2..8
    Mat a = tu::hermitian(gen, dim);
    Observable obs = spectral_decompose(a, 1e-10);
    Mat recon = Mat::Zero(dim, dim);
    Mat sum = Mat::Zero(dim, dim);
    for (const auto& line : obs.spectrum) {
      recon += line.eigenvalue * line.projection;
      sum += line.projection;
    }
    CHECK((recon - a).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((sum - Mat::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("heisenberg with identity evolution is a no-op") {
  Evolution evo = Evolution::identity({0.0, 1.0, 2.0}, 3);
  tu::Gen gen(3);
  Mat a = tu::hermitian(gen, 3);
  CHECK((heisenberg(a, evo, 2.0, 0.0) - a).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("heisenberg rotates pauli-z into pauli-y under an x rotation") {
  // V(1) = exp(-i (pi/4) sigma_x); compared against the hand-computed 2x2
  Mat h = (tu::kPi / 4.0) * tu::pauli_x();
  Evolution evo = Evolution::from_generator(h, {0.0, 1.0});
  Mat rotated = heisenberg(tu::pauli_z(), evo, 1.0, 0.0);
  double to_plus = (rotated - tu::pauli_y()).cwiseAbs().maxCoeff();
  double to_minus = (rotated + tu::pauli_y()).cwiseAbs().maxCoeff();
  CHECK(std::min(to_plus, to_minus) < 1e-12);
}

TEST_CASE("heisenberg composes along the grid") {
  tu::Gen gen(7);
  SUBCASE("generated evolution") {
    Mat h = tu::hermitian(gen, 4);
    Evolution evo = Evolution::from_generator(h, {0.0, 0.5, 1.25, 2.0});
    Mat a = tu::hermitian(gen, 4);
    Mat once = heisenberg(a, evo, 2.0, 0.5);
    Mat twice = heisenberg(heisenberg(a, evo, 1.25, 0.5), evo, 2.0, 1.25);
    CHECK((once - twice).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("non-commuting step unitaries") {
    std::vector<Mat> steps = {tu::unitary(gen, 4), tu::unitary(gen, 4),
                              tu::unitary(gen, 4)};
    Evolution evo = Evolution::from_step_unitaries({0.0, 1.0, 2.0, 3.0}, steps);
    Mat a = tu::hermitian(gen, 4);
    Mat once = heisenberg(a, evo, 3.0, 0.0);
    Mat twice = heisenberg(heisenberg(a, evo, 1.0, 0.0), evo, 3.0, 1.0);
    CHECK((once - twice).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("heisenberg preserves the eigenvalue multiset") {
  tu::Gen gen(13);
  Mat h = tu::hermitian(gen, 5);
  Evolution evo = Evolution::from_generator(h, {0.0, 0.7});
  Mat a = tu::hermitian(gen, 5);
  Mat b = heisenberg(a, evo, 0.7, 0.0);
  Eigen::SelfAdjointEigenSolver<Mat> ea(a), eb(0.5 * (b + b.adjoint()));
  CHECK((ea.eigenvalues() - eb.eigenvalues()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("evolution propagators satisfy the composition law on all triples") {
  tu::Gen gen(17);
  std::vector<double> grid = {0.0, 0.4, 1.0, 1.7};
  std::vector<Mat> steps = {tu::unitary(gen, 3), tu::unitary(gen, 3),
                            tu::unitary(gen, 3)};
  Evolution evo = Evolution::from_step_unitaries(grid, steps);
  for (double t : grid)
    CHECK((evo.propagator(t, t) - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-12);
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j)
      for (std::size_t k = 0; k <= j; ++k) {
        Mat lhs = evo.propagator(grid[i], grid[j]) * evo.propagator(grid[j], grid[k]);
        Mat rhs = evo.propagator(grid[i], grid[k]);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
      }
}

TEST_CASE("evolution rejects off-grid times and non-unitary steps") {
  Evolution evo = Evolution::identity({0.0, 1.0}, 2);
  CHECK_THROWS_AS(evo.propagator(0.5, 0.0), Error);
  CHECK_THROWS_AS(heisenberg(Mat::Identity(2, 2), evo, 0.25, 0.0), Error);
  Mat not_unitary = 2.0 * Mat::Identity(2, 2);
  CHECK_THROWS_AS(Evolution::from_step_unitaries({0.0, 1.0}, {not_unitary}), Error);
}

TEST_CASE("pinch keeps a single full block unchanged") {
  tu::Gen gen(23);
  Mat a = tu::ginibre(gen, 4);
  CHECK((pinch(a, BlockAlgebra::full(4)) - a).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pinch onto singleton blocks extracts the diagonal") {
  Mat a(2, 2);
  a << 1.0, 2.0, 3.0, 4.0;
  Mat got = pinch(a, BlockAlgebra(Mat::Identity(2, 2), {1, 1}));
  Mat want = Mat::Zero(2, 2);
  want(0, 0) = 1.0;
  want(1, 1) = 4.0;
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pinch is idempotent, unital, positive and trace preserving") {
  tu::Gen gen(29);
  Mat q = tu::unitary(gen, 5);
  BlockAlgebra alg(q, {2, 3});
  Mat a = tu::ginibre(gen, 5);
  Mat once = pinch(a, alg);
  CHECK((pinch(once, alg) - once).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((pinch(Mat::Identity(5, 5), alg) - Mat::Identity(5, 5))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK(std::abs((once.trace() - a.trace()).real()) < 1e-12);
  CHECK(std::abs((once.trace() - a.trace()).imag()) < 1e-12);

  Mat g = tu::ginibre(gen, 5);
  Mat positive = g * g.adjoint();
  Mat pinched = pinch(positive, alg);
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (pinched + pinched.adjoint()));
  CHECK(es.eigenvalues().minCoeff() > -1e-12);

  CHECK_THROWS_AS(pinch(Mat::Identity(3, 3), alg), Error);
}

TEST_CASE("trace_norm on known matrices") {
  CHECK(trace_norm(Mat::Zero(3, 3)) == doctest::Approx(0.0).epsilon(1e-15));
  Mat rotationish(2, 2);
  rotationish << 0.0, 0.5, -0.5, 0.0;  // singular values 1/2, 1/2
  CHECK(trace_norm(rotationish) == doctest::Approx(1.0).epsilon(1e-12));
  Observable obs = spectral_decompose(diag3(1.0, 1.0, 0.0));
  CHECK(trace_norm(obs.spectrum[0].projection) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("density state validation") {
  CHECK_THROWS_AS(DensityState(Mat::Identity(2, 2)), Error);  // trace 2
  Mat negative(2, 2);
  negative << 1.5, 0.0, 0.0, -0.5;
  CHECK_THROWS_AS(DensityState(negative), Error);
  DensityState ok = DensityState::maximally_mixed(4);
  CHECK(ok.expect_real(Mat::Identity(4, 4)) == doctest::Approx(1.0));
}

TEST_CASE("filtration requires refinement and shared basis") {
  BlockAlgebra coarse(Mat::Identity(4, 4), {4});
  BlockAlgebra fine(Mat::Identity(4, 4), {2, 2});
  BlockAlgebra finer(Mat::Identity(4, 4), {1, 1, 2});
  Filtration f({{0.0, coarse}, {1.0, fine}, {2.0, finer}});
  CHECK(f.at_time(-1.0).block_sizes().size() == 1);
  CHECK(f.at_time(1.5).block_sizes().size() == 2);
  CHECK(f.at_time(2.0).block_sizes().size() == 3);

  // coarsening over time is rejected
  CHECK_THROWS_AS(Filtration({{0.0, fine}, {1.0, coarse}}), Error);
}
