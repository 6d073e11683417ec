#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace dchmac {

/// Cluster (row, col) on an x-by-x grid, numbered row-major.
struct GridCell {
  int row = 0;
  int col = 0;
};

inline GridCell grid_cell(int index, int side) { return {index / side, index % side}; }

/// Squared grid distance; two clusters conflict when it is <= 4.
int grid_distance_sq(GridCell a, GridCell b);
bool grid_conflict(GridCell a, GridCell b);

struct GridSchedule {
  int side = 0;
  double K = 0.0;
  int L = 0;
  // phases[i] holds the broadcast phases (1..L) of cluster i.
  std::vector<std::vector<int>> phases;

  int clusters() const { return side * side; }
  /// Clusters broadcasting in phase `p`, ascending.
  std::vector<int> phase_members(int p) const;
  /// Ordered parallel set of cluster `i`: itself first, then the other
  /// holders of its first phase.
  std::vector<int> parallel_set(int i) const;
};

struct GridK {
  double K = 0.0;
  int L = 0;
};

/// Closed-form K and period L for an x-by-x grid of M clusters.
GridK grid_k(int side, int clusters);

/// Largest set of clusters that may broadcast together, by exhaustive
/// subset enumeration. Practical for side <= 5.
int max_parallel_broadcasters(int side);

/// Smallest number of phases that covers the grid without conflicts
/// (backtracking colouring). Returns 0 when nothing up to `max_colors` fits.
int min_schedule_period(int side, int max_colors = 9);

GridSchedule grid_schedule(int side);

/// Throws ScheduleError if any two clusters sharing a phase conflict or a
/// cluster has no phase in [1, L].
void check_schedule(const GridSchedule& s);

/// 4-neighbourhood size of each grid cluster.
std::vector<int> grid_neighbor_counts(int side);

nlohmann::json to_json(const GridSchedule& s);

}  // namespace dchmac
