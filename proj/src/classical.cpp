#include "qlab/classical.hpp"

#include <algorithm>
#include <cmath>

#include "qlab/errors.hpp"

namespace qlab {

namespace {

std::vector<int> invert_perm(const std::vector<int>& p) {
  std::vector<int> inv(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) inv[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
  return inv;
}

}  // namespace

ClassicalModel::ClassicalModel(int num_points, std::vector<double> grid,
                               std::vector<std::vector<int>> step_perms,
                               std::map<std::string, std::vector<bool>> events)
    : num_points_(num_points),
      grid_(std::move(grid)),
      step_perms_(std::move(step_perms)),
      events_(std::move(events)) {
  if (num_points_ <= 0) fail(Errc::invalid_argument, "need at least one point");
  if (grid_.empty()) fail(Errc::empty_grid, "classical grid is empty");
  for (std::size_t i = 1; i < grid_.size(); ++i)
    if (!(grid_[i] > grid_[i - 1]))
      fail(Errc::invalid_argument, "grid times must be strictly increasing");
  if (step_perms_.size() + 1 != grid_.size())
    fail(Errc::invalid_argument, "need one permutation per grid interval");
  for (const auto& p : step_perms_) {
    if (static_cast<int>(p.size()) != num_points_)
      fail(Errc::invalid_argument, "permutation size mismatch");
    std::vector<bool> seen(p.size(), false);
    for (int x : p) {
      if (x < 0 || x >= num_points_ || seen[static_cast<std::size_t>(x)])
        fail(Errc::invalid_argument, "dynamics step is not a bijection");
      seen[static_cast<std::size_t>(x)] = true;
    }
    inverse_perms_.push_back(invert_perm(p));
  }
  for (const auto& [name, members] : events_)
    if (static_cast<int>(members.size()) != num_points_)
      fail(Errc::invalid_argument, "event '" + name + "' size mismatch");
}

const std::vector<bool>& ClassicalModel::event(const std::string& name) const {
  auto it = events_.find(name);
  if (it == events_.end()) fail(Errc::unknown_event, "event '" + name + "'");
  return it->second;
}

std::size_t ClassicalModel::time_index(double t) const {
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    double scale = std::max({1.0, std::abs(t), std::abs(grid_[i])});
    if (std::abs(grid_[i] - t) <= 1e-12 * scale) return i;
  }
  fail(Errc::time_not_on_grid, "time " + std::to_string(t) + " not on grid");
}

int ClassicalModel::flow(double s, double t, int x) const {
  if (x < 0 || x >= num_points_)
    fail(Errc::index_out_of_range, "point out of range");
  std::size_t is = time_index(s);
  std::size_t it = time_index(t);
  int y = x;
  if (it >= is) {
    for (std::size_t i = is; i < it; ++i) y = step_perms_[i][static_cast<std::size_t>(y)];
  } else {
    for (std::size_t i = is; i-- > it;) y = inverse_perms_[i][static_cast<std::size_t>(y)];
  }
  return y;
}

ClassicalState ClassicalState::uniform(int n) {
  ClassicalState s;
  s.weights.assign(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
  return s;
}

ClassicalState ClassicalState::dirac(int n, int point) {
  ClassicalState s;
  s.weights.assign(static_cast<std::size_t>(n), 0.0);
  s.weights.at(static_cast<std::size_t>(point)) = 1.0;
  return s;
}

void ClassicalState::validate() const {
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) fail(Errc::not_a_state, "negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    fail(Errc::not_a_state, "weights do not sum to 1");
}

double classical_history_probability(
    const ClassicalState& mu, const ClassicalModel& model,
    const std::vector<std::pair<double, std::string>>& slots) {
  mu.validate();
  if (static_cast<int>(mu.weights.size()) != model.num_points())
    fail(Errc::dimension_mismatch, "state size mismatch");
  const double t0 = model.grid().front();
  double prob = 0.0;
  for (int x = 0; x < model.num_points(); ++x) {
    if (mu.weights[static_cast<std::size_t>(x)] == 0.0) continue;
    bool all = true;
    for (const auto& [t, name] : slots) {
      int y = model.flow(t0, t, x);
      if (!model.event(name)[static_cast<std::size_t>(y)]) {
        all = false;
        break;
      }
    }
    if (all) prob += mu.weights[static_cast<std::size_t>(x)];
  }
  return prob;
}

std::pair<std::optional<double>, std::optional<double>> hitting_times(
    int xi0, const ClassicalModel& model, const std::string& event) {
  const auto& members = model.event(event);
  const double t0 = model.grid().front();
  std::optional<double> first, last;
  for (double t : model.grid()) {
    int y = model.flow(t0, t, xi0);
    if (members[static_cast<std::size_t>(y)]) {
      if (!first) first = t;
      last = t;
    }
  }
  return {first, last};
}

QuantumEmbedding::QuantumEmbedding(const ClassicalModel& model,
                                   const ClassicalState& mu)
    : model_(model),
      state_(DensityState::diagonal(mu.weights)),
      evolution_(Evolution::identity(model.grid(), model.num_points())) {
  mu.validate();
  const int n = model.num_points();
  if (model.grid().size() > 1) {
    std::vector<Mat> steps;
    for (std::size_t i = 0; i + 1 < model.grid().size(); ++i) {
      Mat s = Mat::Zero(n, n);
      for (int x = 0; x < n; ++x)
        s(model.flow(model.grid()[i], model.grid()[i + 1], x), x) = 1.0;
      steps.push_back(std::move(s));
    }
    evolution_ = Evolution::from_step_unitaries(model.grid(), steps);
  }
}

ProjectiveResolution QuantumEmbedding::event_resolution(
    const std::string& name) const {
  const auto& members = model_.event(name);
  const int n = model_.num_points();
  Mat inside = Mat::Zero(n, n);
  for (int x = 0; x < n; ++x)
    if (members[static_cast<std::size_t>(x)]) inside(x, x) = 1.0;
  ProjectiveResolution res;
  res.label = name;
  res.projections.push_back(inside);
  res.projections.push_back(Mat::Identity(n, n) - inside);
  return res;
}

HistoryFamily QuantumEmbedding::history_family(
    const std::vector<std::pair<double, std::string>>& slots) const {
  std::vector<HistorySlot> hs;
  for (const auto& [t, name] : slots) hs.push_back({t, event_resolution(name)});
  return HistoryFamily(std::move(hs), evolution_);
}

QuantumEmbedding embed_as_quantum(const ClassicalModel& model,
                                  const ClassicalState& mu) {
  return QuantumEmbedding(model, mu);
}

}  // namespace qlab
