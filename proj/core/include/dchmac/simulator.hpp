#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dchmac/analysis.hpp"
#include "dchmac/clustering.hpp"
#include "dchmac/config.hpp"
#include "dchmac/random.hpp"
#include "dchmac/types.hpp"

namespace dchmac {

enum class Protocol : std::uint8_t { DCHMAC, FMMAC, FLAT80211 };

std::string_view to_string(Protocol p);
Protocol protocol_from_string(std::string_view s);

/// Per-cluster counters of one frame, the inputs of the energy ledger.
struct FrameOutcome {
  double N_s1 = 0;  // intra slots delivered
  double N_c1 = 0;  // intra slots erased
  double N_s2 = 0;  // inter-cluster transmissions delivered
  double N_c2 = 0;  // inter-cluster transmissions collided
  double T_s1 = 1;
  double T_c1 = 1;
  double T_s2 = 1;
  double T_c2 = 1;
  double packet_slots = 1;  // l
  double P_lost = 0;
  double E_elec = 0;
  int frame_len = 1;
};

struct EnergyLedger {
  std::vector<double> consumed;  // per node, fraction of battery
  double E_ira = 0.0;
  double E_itr = 0.0;
  double E_r = 0.0;
  double E_diss = 0.0;
  double N_s1 = 0, N_c1 = 0, N_s2 = 0, N_c2 = 0;
  std::uint64_t frames_accounted = 0;

  void charge(NodeId id, double amount);
};

/// Applies the per-cluster energy equations to one frame and accumulates
/// the result. Returns the frame's own contribution.
EnergyBreakdown account_energy(EnergyLedger& ledger, const FrameOutcome& frame);

struct FrameTrace {
  int frame = 0;
  std::uint64_t offered = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost = 0;
  std::uint64_t collided = 0;
  std::uint64_t in_flight = 0;
  int clusters = 0;
  double mean_cluster_size = 0.0;
  double mean_cm_count = 0.0;
  double head_energy = 0.0;  // most drained head; mean node for the flat baseline
};

struct MetricsReport {
  Protocol protocol = Protocol::DCHMAC;
  int frames = 0;
  int frame_length = 0;
  double frame_duration = 0.0;

  double throughput_total = 0.0;
  double throughput_intra = 0.0;
  double throughput_inter = 0.0;

  std::uint64_t offered = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost = 0;
  std::uint64_t collided = 0;
  std::uint64_t in_flight = 0;
  std::uint64_t delivered_intra = 0;
  std::uint64_t delivered_inter = 0;

  std::uint64_t intra_slots_ok = 0;
  std::uint64_t f2m_slots_ok = 0;
  std::uint64_t f3_slots_ok = 0;
  std::uint64_t f3_attempts = 0;
  std::uint64_t f3_collisions = 0;
  std::uint64_t f2v_collisions = 0;
  std::uint64_t slot_conflicts = 0;
  std::uint64_t dead_sender_violations = 0;
  std::uint64_t dissolutions = 0;

  double energy_consumed = 0.0;    // mean per node
  double energy_dissipated = 0.0;  // mean E_diss per cluster-frame
  double energy_r = 0.0;           // mean E_r per cluster-frame

  std::vector<FrameTrace> trace;

  nlohmann::json to_json() const;
};

/// Inverse of MetricsReport::to_json; the trace is optional.
MetricsReport metrics_from_json(const nlohmann::json& j);

struct RunOptions {
  bool keep_trace = true;
};

/// Formation followed by `horizon` frames of the chosen protocol.
MetricsReport run(const ValidatedConfig& cfg, Protocol protocol, int horizon,
                  const RunOptions& opts = {});

/// Deployment: target_clusters groups on a square-ish lattice spaced
/// kGroupSpacing * range apart, nodes uniform in a disc of
/// kGroupRadius * range around each group centre.
inline constexpr double kGroupSpacing = 1.5;
inline constexpr double kGroupRadius = 0.2;

struct Deployment {
  std::vector<NodeState> nodes;
  std::vector<int> group;      // deployment group per node
  std::vector<Vec2> centers;   // group centres
  std::vector<Vec2> offsets;   // node offset from its group centre
  std::vector<Vec2> relative;  // relative velocity per node
  Vec2 swarm_velocity;
  double group_radius = 0.0;
};

Deployment deploy(const ValidatedConfig& cfg, RandomStream& rng);
/// Adds one node on the rim of group `g`; returns its id.
NodeId add_node(Deployment& d, int g, const ValidatedConfig& cfg, RandomStream& rng);

struct MobilityEvents {
  std::vector<NodeId> departures;
  std::vector<int> arrivals;  // cluster index per arriving node
};

/// Advances every present node by one frame and draws this frame's
/// departures and arrivals. Departures are drawn from CMs, plus the CID 2
/// holder when it is an ordinary member (single-head baseline).
MobilityEvents mobility_step(Deployment& d, std::span<const Cluster> clusters,
                             const ValidatedConfig& cfg, RandomStream& rng,
                             bool second_seat_is_member = false);

}  // namespace dchmac
