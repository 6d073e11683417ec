#pragma once

#include <span>
#include <vector>

#include "dchmac/config.hpp"
#include "dchmac/grid.hpp"

namespace dchmac {

struct MarkovSolution {
  double tau = 0.0;
  double P_c = 0.0;
  double P_b = 0.0;
  double P_s = 0.0;
  double P_tr = 0.0;
  double b00 = 0.0;
  double b_idle = 0.0;                     // b(-1,0)
  std::vector<std::vector<double>> b;      // b[i][j], j < W_i
  int iterations = 0;

  double total_probability() const;
};

/// Transmission probability for a given conditional collision probability,
/// i.e. the chain's closed form with p fixed.
double markov_tau(int W, int m, double P_tr, double p);

MarkovSolution solve_markov(int W, int m, double P_tr, int R);

/// 1 - exp(-rate * period).
double arrival_probability(double rate, double period);

struct PopulationModel {
  double lambda1 = 0.0;
  double rho_v = 0.0;
  double E_X = 0.0;
  double E_N = 0.0;
  double P = 0.0;
  double Q = 0.0;
};

PopulationModel population_model(const ScenarioConfig& cfg);

double reservation_probability(int total_nodes, int clusters);
double intra_throughput(double P_res, double P_lost, double Q, double E_packet1, double T_e1);
/// min(P_t * E_s * Q, frame_len), both in payload slots.
double inter_packets(double P_t, double E_s, double Q, double frame_len);
double inter_throughput(const MarkovSolution& sol, double E_packet2, double T_idle, double T_s,
                        double T_c);

/// Alternating sum over explicit parallel sets. sets[m] starts with m.
double network_throughput(std::span<const std::vector<int>> sets, std::span<const double> s_i2,
                          std::span<const int> neighbors);
/// Same, with the sets taken from a grid schedule; also checks that
/// clusters sharing a phase are far enough apart.
double network_throughput(const GridSchedule& schedule, std::span<const double> s_i2,
                          std::span<const int> neighbors);
double total_throughput(double S_M, std::span<const double> s_i1);

struct EnergyInputs {
  double E_elec = 0.0;
  double E_packet1 = 0.0;
  double E_packet2 = 0.0;
  double P_succ1 = 0.0;
  double P_lost = 0.0;
  double P_c = 0.0;
  double P_s = 0.0;
  double N_s1 = 0.0;
  double N_c1 = 0.0;
  double N_s2 = 0.0;
  double N_c2 = 0.0;
  double T_s1 = 0.0;
  double T_c1 = 0.0;
  double T_s2 = 0.0;
  double T_c2 = 0.0;
  double S_i1 = 0.0;
  double S_i2 = 0.0;
  double T_s = 0.0;
};

struct EnergyBreakdown {
  double E_r = 0.0;
  double E_ira = 0.0;
  double E_itr = 0.0;
  double E_diss = 0.0;
  double TN1 = 0.0;
  double TN2 = 0.0;
};

double energy_consumed(double E_elec, double length);
EnergyBreakdown energy_closed_form(const EnergyInputs& in);

struct ThroughputReport {
  MarkovSolution markov;
  PopulationModel population;
  double S_i1 = 0.0;
  double S_i2 = 0.0;
  double S_M = 0.0;
  double S = 0.0;
  double P_succ1 = 0.0;
  double P_res = 0.0;
  double P_t = 0.0;
  double E_packet1 = 0.0;
  double E_packet2 = 0.0;
  double E_s = 0.0;
  double P_a = 0.0;
  double T_e1 = 0.0;
  double T_e2 = 0.0;
  double T_idle = 0.0;
  double T_c = 0.0;
  double T_s = 0.0;
  double K = 0.0;
  int L = 0;
  int R = 0;
};

ThroughputReport analyze(const ValidatedConfig& cfg);

nlohmann::json to_json(const ThroughputReport& r);

}  // namespace dchmac
