#include "dchmac/mac.hpp"

#include <algorithm>
#include <set>

#include "dchmac/errors.hpp"

namespace dchmac {

std::pair<ChannelId, ChannelId> channel_assignment(Role role, int k,
                                                   TransferKind cm_transfer,
                                                   bool cm_dual_receive) {
  switch (role) {
    case Role::PCH:
      return {ChannelId::f3(), ChannelId::f2m(k)};
    case Role::SCH:
      return {ChannelId::f2v(k), ChannelId::f1()};
    case Role::CM:
      if (cm_dual_receive) return {ChannelId::f2m(k), ChannelId::f2v(k)};
      return {cm_transfer == TransferKind::Inter ? ChannelId::f2m(k) : ChannelId::f2v(k),
              ChannelId::f1()};
    case Role::TCH:
    case Role::Unclustered:
      break;
  }
  throw RoleError("no channel plan for role " + std::string(to_string(role)));
}

FrameSchedule FrameSchedule::build(const ValidatedConfig& cfg) {
  FrameSchedule f;
  f.reservation_slots = cfg->cluster_capacity;
  f.fixed_period_len = cfg->fixed_period_len;
  f.dynamic_capacity = cfg->frame_data_capacity;
  return f;
}

bool FrameSchedule::assign(const SlotGrant& g) {
  for (const auto& a : assignments) {
    if (a.slot == g.slot && a.channel == g.channel) return false;
  }
  assignments.push_back(g);
  return true;
}

int FrameSchedule::conflicts() const {
  std::map<std::pair<int, ChannelId>, int> use;
  for (const auto& a : assignments) ++use[{a.slot, a.channel}];
  int n = 0;
  for (const auto& [key, count] : use) {
    if (count > 1) ++n;
  }
  return n;
}

ReservationTable collect_reservations(const FrameSchedule& frame,
                                      std::span<const ReservationRequest> requests) {
  ReservationTable table;
  for (const auto& r : requests) {
    bool in_range = r.position >= 0 && r.position < frame.reservation_slots;
    if (!in_range || FrameSchedule::reservation_owner(r.position) != r.cid) {
      table.dropped.push_back(r.cid);
      continue;
    }
    table.checked_in.push_back(r.cid);
    if (r.body.intra_slots > 0) {
      table.demands.push_back(
          {r.sender, r.cid, r.body.re_id, TransferKind::Intra, r.body.intra_slots});
    }
    if (r.body.inter_slots > 0) {
      table.demands.push_back(
          {r.sender, r.cid, r.body.re_id, TransferKind::Inter, r.body.inter_slots});
    }
  }
  return table;
}

SlotAllocation allocate_slots(const ReservationTable& table, SlotCapacity capacity,
                              const HeadIds& heads, int intra_base, int inter_base) {
  std::vector<Demand> order = table.demands;
  std::stable_sort(order.begin(), order.end(), [](const Demand& a, const Demand& b) {
    if (a.cid != b.cid) return a.cid < b.cid;
    return a.kind < b.kind;
  });

  SlotAllocation out;
  for (const auto& d : order) {
    bool intra = d.kind == TransferKind::Intra;
    int& used = intra ? out.intra_used : out.inter_used;
    int cap = intra ? capacity.intra : capacity.inter;
    if (d.slots <= 0) continue;
    if (used + d.slots > cap) {
      out.deferred.push_back(d);
      continue;
    }
    int base = intra ? intra_base : inter_base;
    for (int i = 0; i < d.slots; ++i) {
      SlotGrant g;
      g.slot = static_cast<std::uint16_t>(base + used + i);
      g.sender = d.sender;
      if (intra) {
        g.receiver = heads.sch;
        g.channel = ChannelId::f2v(heads.channel_index);
      } else {
        g.receiver = d.sender == heads.pch ? d.re_id : heads.pch;
        g.channel = ChannelId::f2m(heads.channel_index);
      }
      out.grants.push_back(g);
    }
    used += d.slots;
    out.granted.push_back(d);
  }
  return out;
}

BackoffState backoff_step(BackoffState s, BackoffEvent event, const BackoffParams& p,
                          RandomStream& rng) {
  switch (event) {
    case BackoffEvent::Busy:
      return s;
    case BackoffEvent::Idle:
      if (!s.post_success && s.counter > 0) --s.counter;
      return s;
    case BackoffEvent::PacketReady:
      if (s.post_success) {
        s.post_success = false;
        s.stage = 0;
        s.counter = static_cast<int>(rng.below(static_cast<std::uint64_t>(p.window(0))));
      }
      return s;
    case BackoffEvent::TxSuccess:
      s.post_success = true;
      s.stage = 0;
      s.counter = 0;
      return s;
    case BackoffEvent::TxCollision:
      s.post_success = false;
      s.stage = std::min(s.stage + 1, p.max_stage);
      s.counter = static_cast<int>(rng.below(static_cast<std::uint64_t>(p.window(s.stage))));
      return s;
  }
  return s;
}

FixedPeriodActions fixed_period_duties(const FrameSchedule& frame, PchBookkeeping& pch,
                                       const FixedPeriodInput& in) {
  FixedPeriodActions out;
  out.downlink_slots = std::min(in.downlink_backlog, frame.fixed_period_len);

  std::set<Cid> reserved(in.reserved.begin(), in.reserved.end());
  std::set<Cid> active(in.active_in_fixed.begin(), in.active_in_fixed.end());
  out.piggybacks = static_cast<int>(active.size());

  // CIDs that left the cluster drop out of the bookkeeping.
  std::set<Cid> members(in.members.begin(), in.members.end());
  for (auto it = pch.absent_frames.begin(); it != pch.absent_frames.end();) {
    it = members.count(it->first) ? std::next(it) : pch.absent_frames.erase(it);
  }
  for (Cid c : in.members) {
    if (reserved.count(c) || active.count(c)) {
      pch.absent_frames.erase(c);
      continue;
    }
    int& n = pch.absent_frames[c];
    if (++n == kAbsentFramesToFlag) out.flagged_absent.push_back(c);
  }

  out.ajc_next_frame = in.forwarded_rjc;
  pch.pending_ajc.insert(pch.pending_ajc.end(), in.forwarded_rjc.begin(),
                         in.forwarded_rjc.end());
  return out;
}

bool may_broadcast_to(const FrameSchedule& frame, NodeId neighbor, int slot) {
  int f2 = 0;
  for (const auto& a : frame.assignments) {
    if (a.slot != slot) continue;
    if (a.sender != neighbor && a.receiver != neighbor) continue;
    if (a.channel.band == Band::F2M || a.channel.band == Band::F2V) ++f2;
  }
  return f2 < 2;
}

}  // namespace dchmac
