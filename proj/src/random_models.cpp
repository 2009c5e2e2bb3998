#include "qlab/random_models.hpp"

#include <algorithm>
#include <numeric>

#include "qlab/errors.hpp"

namespace qlab {

Mat random_ginibre(Rng& rng, int dim) {
  Mat g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      g(i, j) = Complex(rng.gaussian(), rng.gaussian());
  return g;
}

Mat random_hermitian(Rng& rng, int dim) {
  return hermitian_part(random_ginibre(rng, dim));
}

Mat random_unitary(Rng& rng, int dim) {
  Eigen::HouseholderQR<Mat> qr(random_ginibre(rng, dim));
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  // fix the phase ambiguity so the distribution does not depend on QR details
  for (int i = 0; i < dim; ++i) {
    Complex d = r(i, i);
    q.col(i) *= (std::abs(d) > 0.0) ? d / std::abs(d) : Complex(1.0, 0.0);
  }
  return q;
}

DensityState random_density(Rng& rng, int dim, bool full_rank) {
  Mat g = random_ginibre(rng, dim);
  Mat rho = g * g.adjoint();
  if (full_rank)
    rho += 0.1 * Mat::Identity(dim, dim);  // keep eigenvalues away from zero
  rho /= rho.trace().real();
  return DensityState(hermitian_part(rho));
}

namespace {

// partition dim basis indices into k non-empty groups
std::vector<int> random_partition_labels(Rng& rng, int dim, int k) {
  std::vector<int> labels(static_cast<std::size_t>(dim));
  for (int i = 0; i < k; ++i) labels[static_cast<std::size_t>(i)] = i;
  for (int i = k; i < dim; ++i)
    labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.index(static_cast<std::size_t>(k)));
  // shuffle
  for (int i = dim - 1; i > 0; --i) {
    std::size_t j = rng.index(static_cast<std::size_t>(i + 1));
    std::swap(labels[static_cast<std::size_t>(i)], labels[j]);
  }
  return labels;
}

}  // namespace

ProjectiveResolution random_resolution(Rng& rng, const Mat& basis, int k) {
  const int dim = static_cast<int>(basis.rows());
  if (k > dim) fail(Errc::invalid_argument, "more outcomes than dimensions");
  std::vector<int> labels = random_partition_labels(rng, dim, k);
  ProjectiveResolution res;
  res.label = "random";
  for (int outcome = 0; outcome < k; ++outcome) {
    Mat diag = Mat::Zero(dim, dim);
    for (int i = 0; i < dim; ++i)
      if (labels[static_cast<std::size_t>(i)] == outcome) diag(i, i) = 1.0;
    res.projections.push_back(basis * diag * basis.adjoint());
  }
  return res;
}

HistoryFamily random_commuting_family(Rng& rng, int dim, int slots,
                                      int outcomes) {
  Mat basis = random_unitary(rng, dim);
  std::vector<HistorySlot> hs;
  for (int i = 0; i < slots; ++i)
    hs.push_back({static_cast<double>(i + 1),
                  random_resolution(rng, basis, outcomes)});
  return HistoryFamily(std::move(hs));
}

HistoryFamily random_family(Rng& rng, int dim, int slots, int outcomes) {
  std::vector<HistorySlot> hs;
  for (int i = 0; i < slots; ++i) {
    Mat basis = random_unitary(rng, dim);
    hs.push_back({static_cast<double>(i + 1),
                  random_resolution(rng, basis, outcomes)});
  }
  return HistoryFamily(std::move(hs));
}

RandomClassicalInstance random_classical_instance(Rng& rng, int max_points,
                                                  int max_slots) {
  int points = 2 + static_cast<int>(rng.index(static_cast<std::size_t>(max_points - 1)));
  int slots = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_slots)));

  std::vector<double> grid(static_cast<std::size_t>(slots) + 1);
  std::iota(grid.begin(), grid.end(), 0.0);

  std::vector<std::vector<int>> steps;
  for (int s = 0; s < slots; ++s) {
    std::vector<int> perm(static_cast<std::size_t>(points));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = points - 1; i > 0; --i) {
      std::size_t j = rng.index(static_cast<std::size_t>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[j]);
    }
    steps.push_back(std::move(perm));
  }

  std::map<std::string, std::vector<bool>> events;
  std::vector<std::pair<double, std::string>> slot_list;
  for (int s = 0; s < slots; ++s) {
    std::vector<bool> members(static_cast<std::size_t>(points));
    bool any = false;
    for (int i = 0; i < points; ++i) {
      members[static_cast<std::size_t>(i)] = rng.uniform() < 0.5;
      any = any || members[static_cast<std::size_t>(i)];
    }
    if (!any) members[rng.index(static_cast<std::size_t>(points))] = true;
    std::string name = "event" + std::to_string(s);
    events[name] = std::move(members);
    slot_list.emplace_back(static_cast<double>(s + 1), name);
  }

  return {ClassicalModel(points, std::move(grid), std::move(steps),
                         std::move(events)),
          std::move(slot_list)};
}

}  // namespace qlab
