#include "dchmac/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "dchmac/errors.hpp"

namespace dchmac {

double MarkovSolution::total_probability() const {
  double s = b_idle;
  for (const auto& row : b) {
    for (double v : row) s += v;
  }
  return s;
}

double markov_tau(int W, int m, double P_tr, double p) {
  if (P_tr <= 0.0) return 0.0;
  // Multiplied through by (1-p) so p = 1/2 and p = 1 need no special case.
  double geo = 0.0;
  double term = 1.0;
  for (int i = 0; i < m; ++i) {
    geo += term;
    term *= 2.0 * p;
  }
  double d = 0.5 * (W * ((1.0 - p) * geo + term) + 1.0) + (1.0 - p) / P_tr;
  return 1.0 / d;
}

MarkovSolution solve_markov(int W, int m, double P_tr, int R) {
  if (W < 1 || m < 0 || R < 1 || P_tr < 0.0 || P_tr > 1.0) {
    throw ConfigError("solve_markov: need W >= 1, m >= 0, R >= 1 and P_tr in [0, 1]");
  }
  MarkovSolution s;
  s.P_tr = P_tr;
  auto collide = [R](double tau) { return 1.0 - std::pow(1.0 - tau, R - 1); };

  if (R == 1 || P_tr == 0.0) {
    s.tau = markov_tau(W, m, P_tr, 0.0);
  } else {
    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo >= 1e-12) {
      if (++s.iterations > 10000) throw NoConvergence("solve_markov did not converge", lo, hi);
      double mid = 0.5 * (lo + hi);
      double g = mid - markov_tau(W, m, P_tr, collide(mid));
      (g < 0.0 ? lo : hi) = mid;
    }
    s.tau = 0.5 * (lo + hi);
  }

  double p = collide(s.tau);
  s.P_c = p;
  s.P_b = 1.0 - std::pow(1.0 - s.tau, R);
  s.P_s = s.P_b > 0.0 ? R * s.tau * std::pow(1.0 - s.tau, R - 1) / s.P_b : 0.0;

  s.b.resize(m + 1);
  if (P_tr == 0.0) {
    s.b_idle = 1.0;
    for (int i = 0; i <= m; ++i) s.b[i].assign(static_cast<std::size_t>(W) << i, 0.0);
    return s;
  }
  s.b00 = s.tau * (1.0 - p);
  s.b_idle = s.b00 / P_tr;
  double head = s.b00;
  for (int i = 0; i <= m; ++i) {
    int Wi = W << i;
    double bi0 = i < m ? head : head / (1.0 - p);
    if (i == m && p >= 1.0) bi0 = 0.0;
    s.b[i].resize(Wi);
    for (int j = 0; j < Wi; ++j) s.b[i][j] = bi0 * (Wi - j) / Wi;
    head *= p;
  }
  return s;
}

double arrival_probability(double rate, double period) { return -std::expm1(-rate * period); }

PopulationModel population_model(const ScenarioConfig& cfg) {
  PopulationModel pm;
  double vr = cfg.relative_speed;
  double vf = cfg.free_flow_speed;
  pm.rho_v = (cfg.cluster_capacity / cfg.broadcast_range) * (1.0 - vr / vf);
  pm.lambda1 = pm.rho_v * vr;
  pm.E_X = pm.lambda1 * cfg.markov_period;
  pm.E_N = cfg.target_clusters * pm.E_X;
  pm.P = static_cast<double>(cfg.total_nodes) / cfg.target_clusters;
  pm.Q = static_cast<double>(cfg.total_nodes - cfg.target_clusters) / cfg.target_clusters;
  return pm;
}

double reservation_probability(int total_nodes, int clusters) {
  return static_cast<double>(total_nodes - clusters) / total_nodes;
}

double intra_throughput(double P_res, double P_lost, double Q, double E_packet1, double T_e1) {
  return P_res * (1.0 - P_lost) * Q * E_packet1 / T_e1;
}

double inter_packets(double P_t, double E_s, double Q, double frame_len) {
  return std::min(P_t * E_s * Q, frame_len);
}

double inter_throughput(const MarkovSolution& sol, double E_packet2, double T_idle, double T_s,
                        double T_c) {
  double num = sol.P_s * sol.P_b * E_packet2;
  if (num == 0.0) return 0.0;
  double den = (1.0 - sol.P_b) * T_idle + sol.P_s * sol.P_b * T_s + (1.0 - sol.P_s) * sol.P_b * T_c;
  return num / den;
}

double network_throughput(std::span<const std::vector<int>> sets, std::span<const double> s_i2,
                          std::span<const int> neighbors) {
  std::size_t M = s_i2.size();
  if (sets.size() != M || neighbors.size() != M) {
    throw ConstraintError("parallel sets, throughputs and neighbour counts differ in size");
  }
  if (M <= 1) return 0.0;
  if (std::all_of(neighbors.begin(), neighbors.end(), [](int r) { return r == 0; })) return 0.0;
  for (int r : neighbors) {
    if (r < 1 || r > 4) throw ConstraintError("neighbour count " + std::to_string(r) +
                                              " outside [1, 4]");
  }

  double total = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    const auto& set = sets[m];
    if (set.empty() || set.front() != static_cast<int>(m)) {
      throw ConstraintError("parallel set of cluster " + std::to_string(m) +
                            " must start with the cluster itself");
    }
    std::set<int> seen;
    for (int i : set) {
      if (i < 0 || i >= static_cast<int>(M)) throw ConstraintError("cluster index out of range");
      if (!seen.insert(i).second) {
        throw ConstraintError("cluster " + std::to_string(i) + " repeated in a parallel set");
      }
    }
    double prefix = 0.0;
    double sign = 1.0;
    for (int i : set) {
      prefix += s_i2[i] / (neighbors[i] + 1);
      total += sign * prefix;
      sign = -sign;
    }
  }
  return total;
}

double network_throughput(const GridSchedule& schedule, std::span<const double> s_i2,
                          std::span<const int> neighbors) {
  int M = schedule.clusters();
  if (static_cast<int>(s_i2.size()) != M) throw ConstraintError("throughput count mismatch");
  std::vector<std::vector<int>> sets;
  for (int m = 0; m < M; ++m) {
    sets.push_back(schedule.parallel_set(m));
    for (int j : sets.back()) {
      if (j != m && !(grid_distance_sq(grid_cell(m, schedule.side),
                                       grid_cell(j, schedule.side)) > 4)) {
        throw ConstraintError("clusters " + std::to_string(m) + " and " + std::to_string(j) +
                              " broadcast together within distance 2");
      }
    }
  }
  return network_throughput(sets, s_i2, neighbors);
}

double total_throughput(double S_M, std::span<const double> s_i1) {
  double s = S_M;
  for (double v : s_i1) s += v;
  return s;
}

double energy_consumed(double E_elec, double length) { return E_elec * length; }

EnergyBreakdown energy_closed_form(const EnergyInputs& in) {
  EnergyBreakdown e;
  e.TN1 = in.P_succ1 * in.N_s1 * in.T_s1 + in.P_lost * in.N_c1 * in.T_c1;
  e.TN2 = in.P_c * in.N_c2 * in.T_c2 + in.P_s * in.N_s2 * in.T_s2;
  e.E_ira = in.E_packet1 * e.TN1 * in.E_elec;
  e.E_itr = in.E_packet2 * e.TN2 * in.E_elec;
  e.E_r = e.E_ira + e.E_itr;
  e.E_diss = std::max(0.0, e.E_r - (in.S_i1 + in.S_i2) * in.T_s);
  return e;
}

ThroughputReport analyze(const ValidatedConfig& vc) {
  const ScenarioConfig& cfg = vc.get();
  ThroughputReport r;
  int N = cfg.total_nodes;
  int M = cfg.target_clusters;
  double l = cfg.payload_slots;

  r.population = population_model(cfg);
  r.P_res = reservation_probability(N, M);
  r.P_succ1 = r.P_res * (1.0 - cfg.packet_loss_prob);
  r.P_t = static_cast<double>(M - 1) / M;
  double Q = r.population.Q;

  double frame_slots = vc.frame_length();
  double frame_time = vc.frame_duration();
  r.T_e1 = frame_slots;
  r.T_idle = 1.0;
  r.T_s = cfg.tx_success_time;
  r.T_c = cfg.tx_collision_time;

  // The vehicle channel carries at most frame_length - reply slots per frame.
  double intra_room = frame_slots - kReplySlots;
  r.E_packet1 = std::min(cfg.intra_arrival_rate * frame_time * l, Q > 0 ? intra_room / Q : 0.0);
  r.S_i1 = intra_throughput(r.P_res, cfg.packet_loss_prob, Q, r.E_packet1, r.T_e1);

  r.E_s = cfg.inter_arrival_rate * frame_time * l;
  r.P_a = r.P_t * r.E_s * Q;
  r.E_packet2 = inter_packets(r.P_t, r.E_s, Q, vc.data_period_len());
  double P_tr = arrival_probability(cfg.inter_arrival_rate, frame_time);

  std::vector<std::vector<int>> sets;
  std::vector<int> neighbors;
  int side = cfg.grid_side;
  bool square = side >= 2 && side * side == M;
  GridSchedule sched;
  if (square) {
    sched = grid_schedule(side);
    r.K = sched.K;
    r.L = sched.L;
    neighbors = grid_neighbor_counts(side);
  } else {
    r.K = 1.0;
    r.L = 1;
    neighbors.assign(M, std::min(4, M - 1));
    for (int m = 0; m < M; ++m) sets.push_back({m});
  }

  std::vector<double> s_i2(M, 0.0);
  double rsum = 0.0;
  for (int n : neighbors) rsum += n;
  r.R = M > 0 ? static_cast<int>(std::lround(rsum / M)) : 0;
  if (M > 1 && r.R >= 1) {
    r.markov = solve_markov(cfg.min_window, cfg.max_backoff_stage, P_tr, r.R);
    for (int m = 0; m < M; ++m) {
      MarkovSolution sol = solve_markov(cfg.min_window, cfg.max_backoff_stage, P_tr, neighbors[m]);
      s_i2[m] = inter_throughput(sol, r.E_packet2, r.T_idle, r.T_s, r.T_c);
    }
    r.T_e2 = (1.0 - r.markov.P_b) * r.T_idle + r.markov.P_s * r.markov.P_b * r.T_s +
             (1.0 - r.markov.P_s) * r.markov.P_b * r.T_c;
    r.S_M = square ? network_throughput(sched, s_i2, neighbors)
                   : network_throughput(sets, s_i2, neighbors);
  } else {
    r.markov.P_tr = P_tr;
  }
  double acc = 0.0;
  for (double v : s_i2) acc += v;
  r.S_i2 = M > 0 ? acc / M : 0.0;
  std::vector<double> s_i1(M, r.S_i1);
  r.S = total_throughput(r.S_M, s_i1);
  return r;
}

nlohmann::json to_json(const ThroughputReport& r) {
  const auto& m = r.markov;
  const auto& pm = r.population;
  return {
      {"markov", {{"tau", m.tau}, {"P_c", m.P_c}, {"P_b", m.P_b}, {"P_s", m.P_s},
                  {"P_tr", m.P_tr}, {"iterations", m.iterations}}},
      {"population", {{"lambda1", pm.lambda1}, {"rho_v", pm.rho_v}, {"E_X", pm.E_X},
                      {"E_N", pm.E_N}, {"P", pm.P}, {"Q", pm.Q}}},
      {"S_i1", r.S_i1}, {"S_i2", r.S_i2}, {"S_M", r.S_M}, {"S", r.S},
      {"P_succ1", r.P_succ1}, {"P_res", r.P_res}, {"P_t", r.P_t},
      {"E_packet1", r.E_packet1}, {"E_packet2", r.E_packet2}, {"E_s", r.E_s}, {"P_a", r.P_a},
      {"T_e1", r.T_e1}, {"T_e2", r.T_e2}, {"T_idle", r.T_idle}, {"T_c", r.T_c}, {"T_s", r.T_s},
      {"K", r.K}, {"L", r.L}, {"R", r.R},
  };
}

}  // namespace dchmac
