#pragma once

#include "qlab/classical.hpp"
#include "qlab/histories.hpp"
#include "qlab/rng.hpp"

namespace qlab {

// Seeded generators for randomized checks and scenario audits. All output is
// a deterministic function of the Rng state.

Mat random_ginibre(Rng& rng, int dim);
Mat random_hermitian(Rng& rng, int dim);          // entries O(1)
Mat random_unitary(Rng& rng, int dim);            // Haar-ish via QR
DensityState random_density(Rng& rng, int dim, bool full_rank = true);

// k orthogonal projections summing to 1, built from a partition of the
// basis rotated by `basis`
ProjectiveResolution random_resolution(Rng& rng, const Mat& basis, int k);

// all slots diagonal in one random basis; pairwise commuting
HistoryFamily random_commuting_family(Rng& rng, int dim, int slots,
                                      int outcomes);

// independent random basis per slot; generically non-commuting
HistoryFamily random_family(Rng& rng, int dim, int slots, int outcomes);

struct RandomClassicalInstance {
  ClassicalModel model;
  std::vector<std::pair<double, std::string>> slots;
};

// random permutation dynamics over a grid with one named random event per
// slot time
RandomClassicalInstance random_classical_instance(Rng& rng, int max_points,
                                                  int max_slots);

}  // namespace qlab
