#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "dchmac/config.hpp"
#include "dchmac/packet.hpp"
#include "dchmac/random.hpp"
#include "dchmac/types.hpp"

namespace dchmac {

enum class TransferKind : std::uint8_t { Intra, Inter };

/// Radio tuning for a clustered role. A CM's f2 radio follows its current
/// transfer; with `cm_dual_receive` its f1 radio retunes to F2V so it can
/// take intra- and inter-cluster traffic in the same period.
std::pair<ChannelId, ChannelId> channel_assignment(
    Role role, int channel_index, TransferKind cm_transfer = TransferKind::Intra,
    bool cm_dual_receive = false);

/// Slot map of one DCHMAC frame. Positions are 0-based from the start of
/// the frame: reservation period, three reply slots, fixed period, dynamic
/// period. Reservation position 0 belongs to the SCH (CID 2), position p to
/// CID p + 2.
struct FrameSchedule {
  int reservation_slots = 0;
  int reply_slots = kReplySlots;
  int fixed_period_len = 0;
  int dynamic_capacity = 0;
  std::vector<SlotGrant> assignments;

  static FrameSchedule build(const ValidatedConfig& cfg);

  int length() const {
    return reservation_slots + reply_slots + fixed_period_len + dynamic_capacity;
  }
  int reply_start() const { return reservation_slots; }
  int fixed_start() const { return reservation_slots + reply_slots; }
  int dynamic_start() const { return fixed_start() + fixed_period_len; }

  static Cid reservation_owner(int position) { return static_cast<Cid>(position + 2); }
  static int reservation_position(Cid cid) { return static_cast<int>(cid) - 2; }

  /// Adds a grant unless it would reuse an occupied (slot, channel) pair.
  bool assign(const SlotGrant& g);
  /// Number of (slot, channel) pairs carrying more than one grant.
  int conflicts() const;
};

struct ReservationRequest {
  NodeId sender = 0;
  Cid cid = kNoCid;
  int position = 0;  // reservation position the request arrived in
  ReservationBody body;
};

struct Demand {
  NodeId sender = 0;
  Cid cid = kNoCid;
  NodeId re_id = 0;
  TransferKind kind = TransferKind::Intra;
  int slots = 0;
  friend bool operator==(const Demand&, const Demand&) = default;
};

struct ReservationTable {
  std::vector<Demand> demands;
  std::vector<Cid> checked_in;
  std::vector<Cid> dropped;  // arrived outside the owner's slot
};

ReservationTable collect_reservations(const FrameSchedule& frame,
                                      std::span<const ReservationRequest> requests);

struct SlotCapacity {
  int intra = 0;
  int inter = 0;
};

struct HeadIds {
  NodeId pch = 0;
  NodeId sch = 0;
  int channel_index = 0;
};

struct SlotAllocation {
  std::vector<SlotGrant> grants;
  std::vector<Demand> granted;
  std::vector<Demand> deferred;
  int intra_used = 0;
  int inter_used = 0;
  int reply_slots_used = kReplySlots;
};

/// Grants whole demands in ascending CID order (intra before inter for one
/// CID) and defers any demand that no longer fits its channel. Intra grants
/// go to the SCH on F2V, inter grants to the PCH on F2M; a PCH demand is a
/// downlink to its ReID. Slots are numbered from the given bases.
SlotAllocation allocate_slots(const ReservationTable& table, SlotCapacity capacity,
                              const HeadIds& heads, int intra_base = 0,
                              int inter_base = 0);
inline SlotAllocation allocate_slots(const ReservationTable& table, int capacity,
                                     const HeadIds& heads) {
  return allocate_slots(table, SlotCapacity{capacity, capacity}, heads);
}

struct BackoffParams {
  int min_window = 16;
  int max_stage = 3;
  int window(int stage) const { return min_window << stage; }
};

/// (stage, counter) of the backoff chain; `post_success` is the (-1, 0)
/// state a station sits in after a delivery until it has a new packet.
struct BackoffState {
  int stage = 0;
  int counter = 0;
  bool post_success = true;

  bool transmitting() const { return !post_success && counter == 0; }
  friend bool operator==(const BackoffState&, const BackoffState&) = default;
};

enum class BackoffEvent : std::uint8_t { Idle, Busy, TxSuccess, TxCollision, PacketReady };

BackoffState backoff_step(BackoffState s, BackoffEvent event, const BackoffParams& params,
                          RandomStream& rng);

struct PchBookkeeping {
  std::map<Cid, int> absent_frames;
  std::vector<NodeId> pending_ajc;  // newcomers answered in the next reply period
};

struct FixedPeriodInput {
  int downlink_backlog = 0;
  std::vector<NodeId> forwarded_rjc;
  std::vector<Cid> members;         // CM CIDs expected to report
  std::vector<Cid> reserved;        // checked in during the reservation period
  std::vector<Cid> active_in_fixed; // state piggybacked in the fixed period
};

struct FixedPeriodActions {
  int downlink_slots = 0;
  int piggybacks = 0;
  std::vector<NodeId> ajc_next_frame;
  std::vector<Cid> flagged_absent;
};

inline constexpr int kAbsentFramesToFlag = 2;

FixedPeriodActions fixed_period_duties(const FrameSchedule& frame, PchBookkeeping& pch,
                                       const FixedPeriodInput& input);

/// False when `neighbor` has both radios on f2 in `slot`; a one-hop F1
/// broadcast to it is then suppressed.
bool may_broadcast_to(const FrameSchedule& frame, NodeId neighbor, int slot);

}  // namespace dchmac
