#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qlab/histories.hpp"

namespace qlab {

// Finite classical state space with deterministic (bijective) dynamics on a
// time grid and named events (subsets of the state space). The exact abelian
// reference model for the diagonal quantum case.
class ClassicalModel {
 public:
  // step_perms[i][x] is the point reached at grid[i+1] from x at grid[i]
  ClassicalModel(int num_points, std::vector<double> grid,
                 std::vector<std::vector<int>> step_perms,
                 std::map<std::string, std::vector<bool>> events);

  int num_points() const { return num_points_; }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<bool>& event(const std::string& name) const;

  std::size_t time_index(double t) const;

  // point reached at time t from point x at time s (either direction)
  int flow(double s, double t, int x) const;

 private:
  int num_points_;
  std::vector<double> grid_;
  std::vector<std::vector<int>> step_perms_;
  std::vector<std::vector<int>> inverse_perms_;
  std::map<std::string, std::vector<bool>> events_;
};

struct ClassicalState {
  std::vector<double> weights;  // non-negative, sums to 1

  static ClassicalState uniform(int n);
  static ClassicalState dirac(int n, int point);

  void validate() const;
};

// sum over points of mu(x) * prod_i [trajectory at t_i lies in event_i];
// trajectories start at the first grid time
double classical_history_probability(
    const ClassicalState& mu, const ClassicalModel& model,
    const std::vector<std::pair<double, std::string>>& slots);

// first and last grid times at which the trajectory from xi0 visits the
// event; nullopt when the orbit misses it
std::pair<std::optional<double>, std::optional<double>> hitting_times(
    int xi0, const ClassicalModel& model, const std::string& event);

// Diagonal quantum realization: weights become a diagonal density matrix,
// events become diagonal projections and the dynamics becomes permutation
// unitaries, so classical and quantum history probabilities coincide.
class QuantumEmbedding {
 public:
  QuantumEmbedding(const ClassicalModel& model, const ClassicalState& mu);

  const DensityState& state() const { return state_; }
  const Evolution& evolution() const { return evolution_; }

  // {chi_event, 1 - chi_event}
  ProjectiveResolution event_resolution(const std::string& name) const;

  // family whose outcome-0 histories match the classical slots
  HistoryFamily history_family(
      const std::vector<std::pair<double, std::string>>& slots) const;

 private:
  const ClassicalModel& model_;
  DensityState state_;
  Evolution evolution_;
};

QuantumEmbedding embed_as_quantum(const ClassicalModel& model,
                                  const ClassicalState& mu);

}  // namespace qlab
