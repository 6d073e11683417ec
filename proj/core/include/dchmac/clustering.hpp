#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "dchmac/config.hpp"
#include "dchmac/random.hpp"
#include "dchmac/types.hpp"

namespace dchmac {

struct CnavEntry {
  NodeId cluster_id = 0;
  Vec2 head_position;
  Vec2 head_velocity;
};

/// Membership registry of one cluster. CIDs range over 1..capacity; 1 is
/// the PCH, 2 the SCH.
class Cluster {
 public:
  Cluster() = default;
  Cluster(NodeId cluster_id, int capacity);

  NodeId cluster_id = 0;
  int capacity = 0;
  std::map<Cid, NodeId> members;
  std::set<Cid> idle_cids;
  std::vector<NodeId> neighbor_clusters;
  std::vector<CnavEntry> cnav;
  std::map<Cid, int> miss_counters;
  std::deque<int> departure_window;
  int channel_index = 0;

  std::size_t size() const { return members.size(); }
  bool operational() const { return members.count(kPchCid) && members.count(kSchCid); }
  std::optional<NodeId> pch() const;
  std::optional<NodeId> sch() const;
  std::optional<Cid> cid_of(NodeId id) const;
  std::vector<NodeId> member_ids() const;
  /// CIDs above 2, i.e. cluster members that are not heads.
  std::vector<Cid> cm_cids() const;

  /// Places `id` on the lowest idle CID >= 3, falling back to CID 2 while
  /// the SCH seat is still empty. Returns nothing when the cluster is full.
  std::optional<Cid> admit(NodeId id);
  void place(Cid cid, NodeId id);
  void release(Cid cid);
};

bool elect_tch(double p, int target_clusters, int total_nodes);

inline constexpr double kCfchEpsilon = 1e-6;
inline constexpr int kListenRounds = 2;
inline constexpr int kMaxFormationRounds = 3;

struct Weights {
  double w1 = 1.0 / 3.0;
  double w2 = 1.0 / 3.0;
  double w3 = 1.0 / 3.0;

  static Weights from(const ScenarioConfig& c) { return {c.w1, c.w2, c.w3}; }
  Weights normalized() const;
};

struct CfchScore {
  double value = 0.0;
  double energy = 0.0;          // P_i
  double velocity_delta = 0.0;  // D_i
  double distance = 0.0;        // T_i
};

CfchScore compute_cfch(const NodeState& node, std::span<const NodeState> peers,
                       const Weights& w);

struct FormationEvent {
  enum class Kind : std::uint8_t { TchElected, Hello, Rjc, Ajc, SelfDeclared, HeadsSelected };
  Kind kind;
  int round = 0;
  NodeId node = 0;
  NodeId cluster_id = 0;
  Cid cid = kNoCid;
};

struct FormationResult {
  std::vector<Cluster> clusters;
  std::vector<FormationEvent> events;
  int rounds = 0;
};

/// Runs the HELLO / RJC / AJC exchange over `members` (indices into
/// `nodes`) and elects heads in every cluster of two or more nodes.
/// `nodes` is indexed by NodeId.
FormationResult form_clusters(std::vector<NodeState>& nodes,
                              std::span<const NodeId> members,
                              const ValidatedConfig& cfg, RandomStream& rng);
FormationResult form_clusters(std::vector<NodeState>& nodes, const ValidatedConfig& cfg,
                              RandomStream& rng);
/// Same exchange with the initial TCH set fixed by the caller.
FormationResult form_clusters_with(std::vector<NodeState>& nodes,
                                   std::span<const NodeId> members,
                                   std::span<const NodeId> initial_tchs,
                                   const ValidatedConfig& cfg, RandomStream& rng);

/// Elects PCH (highest CFCH) and SCH (second), moves them to CIDs 1 and 2
/// and refreshes every member's NAV. Ties go to the lower global id.
std::pair<NodeId, NodeId> select_heads(Cluster& cluster, std::vector<NodeState>& nodes,
                                       const Weights& w);

struct FrameEvents {
  std::vector<Cid> checked_in;
  std::vector<Cid> flagged_absent;    // from the fixed-period duties
  std::vector<NodeId> join_requests;  // forwarded by the smallest-CID CM
};

struct MaintenanceActions {
  std::vector<Cid> freed;
  std::vector<std::pair<NodeId, Cid>> admitted;
  std::vector<NodeId> rejected;
  bool dissolve = false;
  std::optional<NodeId> new_sch;
};

inline constexpr int kMissesToFree = 4;
inline constexpr int kDepartureWindowFrames = 4;
inline constexpr double kDissolveFraction = 0.10;
inline constexpr double kSchEnergyFloor = 0.10;

/// One frame of cluster upkeep: frees CIDs of silent CMs, admits joiners,
/// and decides dissolution or SCH replacement.
MaintenanceActions maintain(Cluster& cluster, std::vector<NodeState>& nodes,
                            const FrameEvents& events, const Weights& w);

}  // namespace dchmac
