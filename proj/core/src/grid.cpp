#include "dchmac/grid.hpp"

#include <algorithm>
#include <functional>
#include <string>

#include "dchmac/errors.hpp"

namespace dchmac {

int grid_distance_sq(GridCell a, GridCell b) {
  int dr = a.row - b.row;
  int dc = a.col - b.col;
  return dr * dr + dc * dc;
}

bool grid_conflict(GridCell a, GridCell b) { return grid_distance_sq(a, b) <= 4; }

std::vector<int> GridSchedule::phase_members(int p) const {
  std::vector<int> out;
  for (int i = 0; i < clusters(); ++i) {
    const auto& ph = phases[i];
    if (std::find(ph.begin(), ph.end(), p) != ph.end()) out.push_back(i);
  }
  return out;
}

std::vector<int> GridSchedule::parallel_set(int i) const {
  std::vector<int> out{i};
  if (phases[i].empty()) return out;
  for (int j : phase_members(phases[i].front())) {
    if (j != i) out.push_back(j);
  }
  return out;
}

namespace {

using Conflicts = std::vector<std::vector<int>>;

// Earlier-indexed neighbours only; enough for row-major backtracking.
Conflicts conflict_lists(int side, bool torus) {
  int n = side * side;
  Conflicts c(n);
  for (int i = 0; i < n; ++i) {
    GridCell a = grid_cell(i, side);
    for (int j = 0; j < i; ++j) {
      GridCell b = grid_cell(j, side);
      bool hit;
      if (torus) {
        int dr = std::abs(a.row - b.row);
        int dc = std::abs(a.col - b.col);
        dr = std::min(dr, side - dr);
        dc = std::min(dc, side - dc);
        hit = dr * dr + dc * dc <= 4;
      } else {
        hit = grid_conflict(a, b);
      }
      if (hit) c[i].push_back(j);
    }
  }
  return c;
}

bool color_grid(const Conflicts& c, int colors, std::vector<int>& out) {
  int n = static_cast<int>(c.size());
  out.assign(n, 0);
  std::function<bool(int)> place = [&](int i) {
    if (i == n) return true;
    for (int col = 1; col <= colors; ++col) {
      bool ok = std::none_of(c[i].begin(), c[i].end(), [&](int j) { return out[j] == col; });
      if (!ok) continue;
      out[i] = col;
      if (place(i + 1)) return true;
    }
    out[i] = 0;
    return false;
  };
  return place(0);
}

GridSchedule from_colors(int side, int L, const std::vector<int>& colors) {
  GridSchedule s;
  s.side = side;
  s.L = L;
  s.phases.resize(colors.size());
  for (std::size_t i = 0; i < colors.size(); ++i) s.phases[i] = {colors[i]};
  return s;
}

}  // namespace

int max_parallel_broadcasters(int side) {
  int n = side * side;
  std::vector<std::vector<bool>> bad(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      bad[i][j] = i != j && grid_conflict(grid_cell(i, side), grid_cell(j, side));
    }
  }
  int best = 0;
  std::vector<int> chosen;
  std::function<void(int)> walk = [&](int i) {
    if (static_cast<int>(chosen.size()) + (n - i) <= best) return;
    if (i == n) {
      best = std::max(best, static_cast<int>(chosen.size()));
      return;
    }
    bool ok = std::none_of(chosen.begin(), chosen.end(), [&](int j) { return bad[i][j]; });
    if (ok) {
      chosen.push_back(i);
      walk(i + 1);
      chosen.pop_back();
    }
    walk(i + 1);
  };
  walk(0);
  return best;
}

int min_schedule_period(int side, int max_colors) {
  Conflicts c = conflict_lists(side, false);
  std::vector<int> colors;
  for (int L = 1; L <= max_colors; ++L) {
    if (color_grid(c, L, colors)) return L;
  }
  return 0;
}

GridK grid_k(int side, int clusters) {
  if (side < 2) throw GridError("grid side must be at least 2");
  if (clusters != side * side) {
    throw GridError("cluster count " + std::to_string(clusters) + " is not " +
                    std::to_string(side) + " squared");
  }
  switch (side) {
    case 2: return {1.0, min_schedule_period(2)};
    case 3: return {2.0, min_schedule_period(3)};
    case 4: return {4.0, min_schedule_period(4)};
    default: return {clusters / 5.0, 5};
  }
}

GridSchedule grid_schedule(int side) {
  if (side < 2) throw ScheduleError("grid side must be at least 2");
  GridK k = grid_k(side, side * side);
  GridSchedule s;
  if (side <= 6) {
    std::vector<int> colors;
    if (!color_grid(conflict_lists(side, false), k.L, colors)) {
      throw ScheduleError("no conflict-free assignment with L=" + std::to_string(k.L) +
                          " for side " + std::to_string(side));
    }
    s = from_colors(side, k.L, colors);
  } else {
    // Repeat a pattern that is valid on the 5x5 torus.
    std::vector<int> base;
    if (!color_grid(conflict_lists(5, true), 5, base)) {
      throw ScheduleError("no periodic 5-phase pattern exists");
    }
    std::vector<int> colors(side * side);
    for (int i = 0; i < side * side; ++i) {
      GridCell c = grid_cell(i, side);
      colors[i] = base[(c.row % 5) * 5 + c.col % 5];
    }
    s = from_colors(side, 5, colors);
  }
  s.K = k.K;
  check_schedule(s);
  return s;
}

void check_schedule(const GridSchedule& s) {
  int n = s.clusters();
  if (static_cast<int>(s.phases.size()) != n) throw ScheduleError("phase table size mismatch");
  for (int i = 0; i < n; ++i) {
    if (s.phases[i].empty()) {
      throw ScheduleError("cluster " + std::to_string(i) + " has no broadcast phase");
    }
    for (int p : s.phases[i]) {
      if (p < 1 || p > s.L) throw ScheduleError("phase out of range");
    }
  }
  for (int p = 1; p <= s.L; ++p) {
    auto m = s.phase_members(p);
    for (std::size_t a = 0; a < m.size(); ++a) {
      for (std::size_t b = a + 1; b < m.size(); ++b) {
        if (grid_conflict(grid_cell(m[a], s.side), grid_cell(m[b], s.side))) {
          throw ScheduleError("clusters " + std::to_string(m[a]) + " and " +
                              std::to_string(m[b]) + " share phase " + std::to_string(p));
        }
      }
    }
  }
}

std::vector<int> grid_neighbor_counts(int side) {
  std::vector<int> out(side * side);
  for (int i = 0; i < side * side; ++i) {
    GridCell c = grid_cell(i, side);
    out[i] = (c.row > 0) + (c.row + 1 < side) + (c.col > 0) + (c.col + 1 < side);
  }
  return out;
}

nlohmann::json to_json(const GridSchedule& s) {
  return {{"side", s.side}, {"K", s.K}, {"L", s.L}, {"phases", s.phases}};
}

}  // namespace dchmac
