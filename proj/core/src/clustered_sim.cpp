#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "dchmac/clustering.hpp"
#include "dchmac/errors.hpp"
#include "dchmac/event_queue.hpp"
#include "sim_internal.hpp"

namespace dchmac::detail {
namespace {

struct Pkt {
  std::uint64_t id = 0;
  NodeId src = 0;
  NodeId dst = 0;
};

struct NodeAux {
  std::deque<Pkt> intra_q;
  std::deque<Pkt> inter_q;
  int cluster = -1;
  int granted_intra = 0;
  int granted_inter = 0;
};

enum class GrantKind : std::uint8_t { Intra, Up, Down };

struct Grant {
  Tick tick = 0;
  NodeId sender = 0;
  GrantKind kind = GrantKind::Intra;
};

struct ClusterRt {
  bool alive = true;
  std::deque<Pkt> f3_q;    // PCH -> other clusters
  std::deque<Pkt> down_q;  // arrived from other clusters, for our CMs
  int pending_up = 0;
  int pending_down = 0;
  PchBookkeeping book;
  std::vector<int> neighbors;
  std::deque<Grant> f2v;
  std::deque<Grant> f2m;
  std::vector<ReservationRequest> requests;
  std::vector<Cid> checked_in;
  std::vector<Cid> flagged;
  Tick leftover_start = 0;
  FrameOutcome out;
  std::vector<NodeId> intra_dst;  // destination candidates, refreshed per frame
  std::vector<NodeId> inter_dst;
};

struct PendingJoin {
  NodeId node = 0;
  int cluster = -1;
  int ready_frame = 0;
};

class Engine {
 public:
  Engine(const ValidatedConfig& cfg, Protocol p, const RunOptions& opts)
      : cfg_(cfg),
        proto_(p),
        opts_(opts),
        rng_(seeded_rng(cfg->rng_seed)),
        csma_({cfg->min_window, cfg->max_backoff_stage}, 2.0 * cfg->broadcast_range,
              2.0 * cfg->broadcast_range, cfg->tx_success_time, cfg->retry_limit),
        w_(Weights::from(cfg.get())) {
    F_ = cfg.frame_length();
    X_ = cfg->cluster_capacity;
    C_ = static_cast<int>(std::lround(F_ / 3.0));
    reply_at_ = dch() ? X_ : C_;
    l_ = cfg->payload_slots;
    E_ = cfg->energy_per_packet;
    Ectl_ = E_ * cfg->control_energy_factor;
    sched_ = FrameSchedule::build(cfg);
  }

  MetricsReport run(int horizon) {
    dep_ = deploy(cfg_, rng_);
    aux_.resize(nodes().size());
    ledger_.consumed.assign(nodes().size(), 0.0);

    FormationResult fr = form_clusters(nodes(), cfg_, rng_);
    for (auto& c : fr.clusters) adopt(std::move(c));
    recolor();

    rep_.protocol = proto_;
    rep_.frame_length = F_;
    rep_.frame_duration = cfg_.frame_duration();

    for (int f = 0; f < horizon; ++f) run_frame(f);
    finish(horizon);
    return rep_;
  }

 private:
  bool dch() const { return proto_ == Protocol::DCHMAC; }
  std::vector<NodeState>& nodes() { return dep_.nodes; }
  NodeState& node(NodeId id) { return dep_.nodes[id]; }
  bool usable(NodeId id) { return node(id).present && node(id).alive(); }
  bool operational(int i) const { return rt_[i].alive && cl_[i].operational(); }

  // Intra-cluster relay node: SCH under DCHMAC, the single CH otherwise.
  std::optional<NodeId> relay(int i) const { return dch() ? cl_[i].sch() : cl_[i].pch(); }
  bool is_source(const NodeState& n) const {
    return n.role == Role::CM || (!dch() && n.role == Role::SCH);
  }

  void charge(NodeId id, double amount) {
    ledger_.charge(id, amount);
    auto& n = node(id);
    n.residual_energy = std::max(0.0, n.residual_energy - amount);
  }
  void charge_tx(NodeId id, double amount) {
    if (node(id).residual_energy <= 0.0) ++rep_.dead_sender_violations;
    charge(id, amount);
  }

  void adopt(Cluster c) {
    int idx = static_cast<int>(cl_.size());
    for (const auto& [cid, id] : c.members) aux_[id].cluster = idx;
    cl_.push_back(std::move(c));
    rt_.emplace_back();
    csma_.resize(rt_.size());
  }

  void recolor() {
    const double R = cfg_->broadcast_range;
    std::vector<int> order;
    for (int i = 0; i < static_cast<int>(cl_.size()); ++i) {
      if (rt_[i].alive && !cl_[i].members.empty()) order.push_back(i);
    }
    auto near = [&](int a, int b) {
      for (const auto& [ca, ia] : cl_[a].members) {
        if (!node(ia).present) continue;
        for (const auto& [cb, ib] : cl_[b].members) {
          if (node(ib).present && distance(node(ia).position, node(ib).position) <= R) return true;
        }
      }
      return false;
    };
    for (std::size_t x = 0; x < order.size(); ++x) {
      std::vector<bool> used(order.size() + 1, false);
      for (std::size_t y = 0; y < x; ++y) {
        int k = cl_[order[y]].channel_index;
        if (k < static_cast<int>(used.size()) && near(order[x], order[y])) used[k] = true;
      }
      int k = 0;
      while (used[k]) ++k;
      cl_[order[x]].channel_index = k;
    }
  }

  void refresh_neighbors() {
    const double reach = 2.0 * cfg_->broadcast_range;
    int n = static_cast<int>(cl_.size());
    for (int i = 0; i < n; ++i) {
      rt_[i].neighbors.clear();
      if (auto p = cl_[i].pch()) csma_.st[i].pos = node(*p).position;
    }
    for (int i = 0; i < n; ++i) {
      if (!operational(i)) continue;
      for (int j = 0; j < n; ++j) {
        if (j == i || !operational(j)) continue;
        if (distance(csma_.st[i].pos, csma_.st[j].pos) <= reach) rt_[i].neighbors.push_back(j);
      }
    }
    for (int i = 0; i < n; ++i) {
      auto& r = rt_[i];
      r.intra_dst.clear();
      r.inter_dst.clear();
      if (!operational(i)) continue;
      for (const auto& [cid, id] : cl_[i].members) {
        if (is_source(node(id))) r.intra_dst.push_back(id);
      }
      for (int j : r.neighbors) {
        for (const auto& [cid, id] : cl_[j].members) {
          if (is_source(node(id))) r.inter_dst.push_back(id);
        }
      }
    }
  }

  // ---- frame start -------------------------------------------------------

  void frame_start(Tick t0) {
    MobilityEvents mv = mobility_step(dep_, cl_, cfg_, rng_, !dch());
    for (NodeId id : mv.departures) q_.push(t0 + rng_.below(F_), EventKind::NodeDeparture, id);
    for (int ci : mv.arrivals) {
      auto pch = cl_[ci].pch();
      int g = pch ? dep_.group[*pch] : 0;
      NodeId id = add_node(dep_, g, cfg_, rng_);
      node(id).present = false;
      aux_.emplace_back();
      ledger_.consumed.push_back(0.0);
      q_.push(t0 + rng_.below(F_), EventKind::NodeArrival, id, static_cast<std::uint64_t>(ci));
    }
    refresh_neighbors();

    double dt = cfg_.frame_duration();
    double mi = cfg_->intra_arrival_rate * dt;
    double me = cfg_->inter_arrival_rate * dt;
    for (int i = 0; i < static_cast<int>(cl_.size()); ++i) {
      if (!operational(i)) continue;
      for (const auto& [cid, id] : cl_[i].members) {
        const NodeState& n = node(id);
        if (!n.present || !n.alive() || !is_source(n)) continue;
        std::uint32_t a = mi > 0 ? rng_.poisson(mi) : 0;
        std::uint32_t b = me > 0 ? rng_.poisson(me) : 0;
        for (std::uint32_t k = 0; k < a; ++k) {
          q_.push(t0 + rng_.below(F_), EventKind::PacketArrival, id, 1);
        }
        for (std::uint32_t k = 0; k < b; ++k) {
          q_.push(t0 + rng_.below(F_), EventKind::PacketArrival, id, 0);
        }
      }
    }
  }

  void on_departure(NodeId id) {
    NodeState& n = node(id);
    if (!n.present) return;
    n.present = false;
    auto& a = aux_[id];
    lost_ += a.intra_q.size() + a.inter_q.size();
    a.intra_q.clear();
    a.inter_q.clear();
  }

  void on_arrival(NodeId id, int cluster, int f) {
    node(id).present = true;
    joins_.push_back({id, cluster, f + (dch() ? 0 : 1)});
  }

  void on_packet(NodeId src, bool intra) {
    const NodeState& n = node(src);
    int i = aux_[src].cluster;
    if (!n.present || !n.alive() || i < 0 || !operational(i)) return;
    const auto& cands = intra ? rt_[i].intra_dst : rt_[i].inter_dst;
    std::size_t others = cands.size() - (intra ? 1 : 0);
    if (cands.empty() || others == 0) return;
    NodeId dst;
    do {
      dst = cands[rng_.below(cands.size())];
    } while (dst == src);
    ++offered_;
    auto& q = intra ? aux_[src].intra_q : aux_[src].inter_q;
    if (static_cast<int>(q.size()) >= cfg_->queue_limit) {
      ++lost_;
      return;
    }
    q.push_back({next_pkt_++, src, dst});
  }

  void drain(Tick now, int f) {
    while (auto t = q_.peek_tick()) {
      if (*t > now) break;
      Event e = *q_.pop();
      switch (e.kind) {
        case EventKind::FrameBoundary: frame_start(e.tick); break;
        case EventKind::NodeDeparture: on_departure(e.node); break;
        case EventKind::NodeArrival: on_arrival(e.node, static_cast<int>(e.payload), f); break;
        case EventKind::PacketArrival: on_packet(e.node, e.payload == 1); break;
        case EventKind::SlotBoundary: break;
      }
    }
  }

  // ---- control ----------------------------------------------------------

  void reservation_slot(int pos) {
    Cid cid = FrameSchedule::reservation_owner(pos);
    for (int i = 0; i < static_cast<int>(cl_.size()); ++i) {
      if (!operational(i)) continue;
      auto it = cl_[i].members.find(cid);
      if (it == cl_[i].members.end()) continue;
      NodeId id = it->second;
      if (!usable(id)) continue;
      auto& a = aux_[id];
      ReservationBody b;
      // Requests are granted whole, so each CM asks for at most its share.
      int senders = std::max<int>(1, static_cast<int>(cl_[i].cm_cids().size()));
      int want_intra = std::min(static_cast<int>(a.intra_q.size()) - a.granted_intra,
                                (intra_capacity() + senders - 1) / senders);
      int want_inter = std::min(static_cast<int>(a.inter_q.size()) - a.granted_inter,
                                (inter_capacity() + senders) / (senders + 1));
      b.intra_slots = static_cast<std::uint16_t>(std::clamp(want_intra, 0, 0xFFFF));
      b.inter_slots = static_cast<std::uint16_t>(std::clamp(want_inter, 0, 0xFFFF));
      if (!a.inter_q.empty()) b.re_id = a.inter_q.front().dst;
      else if (!a.intra_q.empty()) b.re_id = a.intra_q.front().dst;
      rt_[i].requests.push_back({id, cid, pos, b});
      charge_tx(id, Ectl_);
      if (auto p = cl_[i].pch(); p && usable(*p)) charge(*p, Ectl_);
      if (dch()) {
        if (auto s = cl_[i].sch(); s && usable(*s)) charge(*s, Ectl_);
      }
    }
  }

  int intra_capacity() const { return dch() ? F_ - kReplySlots : F_ - C_; }
  int inter_capacity() const { return dch() ? sched_.dynamic_capacity : F_ - C_; }

  void allocate(int i, Tick t0) {
    auto& r = rt_[i];
    auto& c = cl_[i];
    NodeId pch = *c.pch();
    NodeId hub = *relay(i);
    ReservationTable table = collect_reservations(sched_, r.requests);
    r.requests.clear();
    r.checked_in = table.checked_in;

    FrameSchedule fs = sched_;
    const int k = c.channel_index;
    auto check = [&](std::uint16_t slot, NodeId s, NodeId rcv, ChannelId ch) {
      if (!fs.assign({slot, s, rcv, ch})) ++rep_.slot_conflicts;
    };
    for (const auto& g : r.f2v) {
      check(static_cast<std::uint16_t>(g.tick - t0), g.sender, hub, ChannelId::f2v(k));
    }

    int intra_cap;
    int inter_cap;
    int intra_base;
    int inter_base;
    int backlog = static_cast<int>(r.down_q.size()) - r.pending_down;
    if (dch()) {
      FixedPeriodInput in;
      in.downlink_backlog = backlog;
      in.members = c.cm_cids();
      in.reserved = table.checked_in;
      FixedPeriodActions act = fixed_period_duties(fs, r.book, in);
      r.flagged = act.flagged_absent;
      int base = sched_.fixed_start();
      for (int d = 0; d < act.downlink_slots; ++d) {
        NodeId to = r.down_q[r.pending_down].dst;
        r.f2m.push_back({t0 + base + d, pch, GrantKind::Down});
        check(static_cast<std::uint16_t>(base + d), pch, to, ChannelId::f2m(k));
        ++r.pending_down;
      }
      backlog -= act.downlink_slots;
      intra_base = X_ + kReplySlots;
      inter_base = sched_.dynamic_start();
    } else {
      intra_base = C_;
      inter_base = C_;
    }
    intra_cap = intra_capacity();
    inter_cap = inter_capacity();

    // Uplinks only as far as the PCH can buffer them.
    int room = cfg_->queue_limit - static_cast<int>(r.f3_q.size()) - r.pending_up;
    ReservationTable kept;
    if (backlog > 0) {
      int share = std::max(1, inter_cap / (static_cast<int>(c.cm_cids().size()) + 1));
      kept.demands.push_back({pch, kPchCid, r.down_q[r.pending_down].dst, TransferKind::Inter,
                              std::min(backlog, std::max(share, inter_cap / 2))});
    }
    for (auto d : table.demands) {
      if (d.kind == TransferKind::Inter) {
        d.slots = std::min(d.slots, room);
        if (d.slots <= 0) continue;
        room -= d.slots;
      }
      kept.demands.push_back(d);
    }

    HeadIds heads{pch, hub, k};
    SlotAllocation alloc =
        allocate_slots(kept, SlotCapacity{intra_cap, inter_cap}, heads, intra_base, inter_base);
    for (const auto& g : alloc.grants) {
      check(g.slot, g.sender, g.receiver, g.channel);
      if (g.channel.band == Band::F2V) {
        r.f2v.push_back({t0 + g.slot, g.sender, GrantKind::Intra});
      } else {
        r.f2m.push_back({t0 + g.slot, g.sender, g.sender == pch ? GrantKind::Down : GrantKind::Up});
      }
    }
    rep_.slot_conflicts += static_cast<std::uint64_t>(fs.conflicts());
    for (const auto& d : alloc.granted) {
      if (d.kind == TransferKind::Intra) {
        aux_[d.sender].granted_intra += d.slots;
      } else if (d.sender == pch) {
        r.pending_down += d.slots;
      } else {
        aux_[d.sender].granted_inter += d.slots;
        r.pending_up += d.slots;
      }
    }
    r.leftover_start = t0 + inter_base + alloc.inter_used;

    // Reply period: heads announce, members listen.
    if (usable(pch)) charge_tx(pch, Ectl_);
    if (dch() && usable(hub)) charge_tx(hub, Ectl_);
    for (const auto& [cid, id] : c.members) {
      if (cid > kSchCid && usable(id)) charge(id, Ectl_);
    }
  }

  // ---- data -------------------------------------------------------------

  bool erased() { return cfg_->packet_loss_prob > 0.0 && rng_.bernoulli(cfg_->packet_loss_prob); }

  void execute_intra(Tick now) {
    struct Tx {
      int cluster;
      NodeId sender;
      NodeId hub;
      bool hit = false;
    };
    std::vector<Tx> txs;
    for (int i = 0; i < static_cast<int>(cl_.size()); ++i) {
      auto& r = rt_[i];
      while (!r.f2v.empty() && r.f2v.front().tick <= now) {
        Grant g = r.f2v.front();
        r.f2v.pop_front();
        if (g.tick < now) throw SimError("missed a vehicle-channel grant");
        auto& a = aux_[g.sender];
        if (a.granted_intra > 0) --a.granted_intra;
        auto hub = relay(i);
        if (!operational(i) || !hub || !usable(*hub)) continue;
        if (!usable(g.sender) || a.cluster != i || a.intra_q.empty()) continue;
        txs.push_back({i, g.sender, *hub});
      }
    }
    const double R = cfg_->broadcast_range;
    for (auto& t : txs) {
      for (const auto& u : txs) {
        if (u.cluster == t.cluster) continue;
        if (cl_[u.cluster].channel_index != cl_[t.cluster].channel_index) continue;
        if (distance(node(u.sender).position, node(t.hub).position) <= R) t.hit = true;
      }
    }
    for (const auto& t : txs) {
      auto& r = rt_[t.cluster];
      auto& a = aux_[t.sender];
      charge_tx(t.sender, E_ * l_);
      charge(t.hub, E_ * l_);
      if (!usable(t.hub)) {
        // Relay's battery ran out on receipt; the sender retries later.
        r.out.N_c1 += 1;
        continue;
      }
      charge_tx(t.hub, E_ * l_);
      if (t.hit) ++rep_.f2v_collisions;
      if (t.hit || erased()) {
        r.out.N_c1 += 1;
        continue;
      }
      Pkt p = a.intra_q.front();
      a.intra_q.pop_front();
      if (usable(p.dst) && aux_[p.dst].cluster == t.cluster) {
        charge(p.dst, E_ * l_);
        ++delivered_;
        ++rep_.delivered_intra;
        rep_.intra_slots_ok += l_;
        r.out.N_s1 += 1;
      } else {
        ++lost_;
        r.out.N_c1 += 1;
      }
    }
  }

  void execute_f2m(Tick now) {
    for (int i = 0; i < static_cast<int>(cl_.size()); ++i) {
      auto& r = rt_[i];
      while (!r.f2m.empty() && r.f2m.front().tick <= now) {
        Grant g = r.f2m.front();
        r.f2m.pop_front();
        if (g.tick < now) throw SimError("missed a member-channel grant");
        auto pch = cl_[i].pch();
        bool head_ok = operational(i) && pch && usable(*pch);
        if (g.kind == GrantKind::Up) {
          auto& a = aux_[g.sender];
          if (a.granted_inter > 0) --a.granted_inter;
          if (r.pending_up > 0) --r.pending_up;
          if (!head_ok || !usable(g.sender) || a.cluster != i || a.inter_q.empty()) continue;
          charge_tx(g.sender, E_ * l_);
          charge(*pch, E_ * l_);
          if (erased()) {
            r.out.N_c1 += 1;
            continue;
          }
          r.f3_q.push_back(a.inter_q.front());
          a.inter_q.pop_front();
          rep_.f2m_slots_ok += l_;
          r.out.N_s1 += 1;
        } else {
          if (r.pending_down > 0) --r.pending_down;
          if (!head_ok || r.down_q.empty()) continue;
          charge_tx(*pch, E_ * l_);
          if (erased()) {
            r.out.N_c1 += 1;
            continue;
          }
          Pkt p = r.down_q.front();
          r.down_q.pop_front();
          if (usable(p.dst) && aux_[p.dst].cluster == i) {
            charge(p.dst, E_ * l_);
            ++delivered_;
            ++rep_.delivered_inter;
            rep_.f2m_slots_ok += l_;
            r.out.N_s1 += 1;
          } else {
            ++lost_;
            r.out.N_c1 += 1;
          }
        }
      }
    }
  }

  void contend(Tick now, int s) {
    auto ready = [&](int i) {
      if (!operational(i) || rt_[i].f3_q.empty()) return false;
      auto p = cl_[i].pch();
      return p && usable(*p);
    };
    auto available = [&](int i) { return dch() || (s >= C_ && now >= rt_[i].leftover_start); };
    auto begin = [&](int i) -> int {
      auto& r = rt_[i];
      const Pkt& p = r.f3_q.front();
      int j = aux_[p.dst].cluster;
      bool reachable = j >= 0 && operational(j) && usable(p.dst) &&
                       std::find(r.neighbors.begin(), r.neighbors.end(), j) != r.neighbors.end();
      if (!reachable) {
        r.f3_q.pop_front();
        ++lost_;
        return -1;
      }
      return j;
    };
    auto rx_busy = [&](int j) {
      if (!operational(j)) return true;
      auto p = cl_[j].pch();
      if (!p || !usable(*p)) return true;
      return !dch() && (s < C_ || now < rt_[j].leftover_start);
    };
    auto done = [&](int i, bool ok) {
      auto& r = rt_[i];
      NodeId pch = *cl_[i].pch();
      ++rep_.f3_attempts;
      charge_tx(pch, E_ * l_ * cfg_->tx_success_time);
      if (!ok) {
        ++rep_.f3_collisions;
        r.out.N_c2 += 1;
        return;
      }
      Pkt p = r.f3_q.front();
      r.f3_q.pop_front();
      r.out.N_s2 += 1;
      rep_.f3_slots_ok += l_;
      int j = csma_.st[i].rx;
      auto& rj = rt_[j];
      if (auto pj = cl_[j].pch(); pj && operational(j)) {
        charge(*pj, E_ * l_);
        if (static_cast<int>(rj.down_q.size()) < cfg_->queue_limit) {
          rj.down_q.push_back(p);
          return;
        }
      }
      ++lost_;
    };
    auto drop = [&](int i) {
      rt_[i].f3_q.pop_front();
      ++collided_;
    };
    csma_.step(rng_, ready, available, begin, rx_busy, done, drop);
  }

  // ---- frame end ----------------------------------------------------------

  void dissolve(int i) {
    auto& r = rt_[i];
    std::vector<NodeId> members;
    for (const auto& [cid, id] : cl_[i].members) {
      if (usable(id)) members.push_back(id);
      aux_[id].cluster = -1;
      aux_[id].granted_intra = 0;
      aux_[id].granted_inter = 0;
    }
    lost_ += r.f3_q.size() + r.down_q.size();
    r.f3_q.clear();
    r.down_q.clear();
    r.f2v.clear();
    r.f2m.clear();
    r.alive = false;
    csma_.st[i] = Csma::Station{};
    cl_[i].members.clear();
    ++rep_.dissolutions;
    std::sort(members.begin(), members.end());
    if (members.empty()) return;
    FormationResult fr = form_clusters(nodes(), members, cfg_, rng_);
    for (auto& c : fr.clusters) adopt(std::move(c));
  }

  int join_target(int wanted, NodeId id) {
    if (wanted >= 0 && wanted < static_cast<int>(cl_.size()) && operational(wanted)) return wanted;
    int best = -1;
    double bd = 0.0;
    for (int i = 0; i < static_cast<int>(cl_.size()); ++i) {
      if (!operational(i)) continue;
      double d = distance(node(*cl_[i].pch()).position, node(id).position);
      if (best < 0 || d < bd) {
        best = i;
        bd = d;
      }
    }
    return best;
  }

  void frame_end(int f) {
    for (NodeId id = 0; id < nodes().size(); ++id) {
      auto& a = aux_[id];
      if (node(id).alive() || (a.intra_q.empty() && a.inter_q.empty())) continue;
      lost_ += a.intra_q.size() + a.inter_q.size();
      a.intra_q.clear();
      a.inter_q.clear();
    }

    std::vector<int> doomed;
    int n = static_cast<int>(cl_.size());
    for (int i = 0; i < n; ++i) {
      auto& r = rt_[i];
      if (!operational(i)) continue;

      FrameEvents ev;
      ev.checked_in = r.checked_in;
      if (dch()) ev.flagged_absent = r.flagged;
      for (auto& j : joins_) {
        if (j.ready_frame > f || !usable(j.node)) continue;
        j.cluster = join_target(j.cluster, j.node);
        if (j.cluster == i) ev.join_requests.push_back(j.node);
      }
      MaintenanceActions act = maintain(cl_[i], nodes(), ev, w_);
      for (const auto& [id, cid] : act.admitted) {
        aux_[id].cluster = i;
        std::erase_if(joins_, [id = id](const PendingJoin& j) { return j.node == id; });
      }
      if (act.dissolve) doomed.push_back(i);

      r.out.T_s2 = cfg_->tx_success_time;
      r.out.T_c2 = cfg_->tx_collision_time;
      r.out.packet_slots = l_;
      r.out.P_lost = cfg_->packet_loss_prob;
      r.out.E_elec = E_;
      r.out.frame_len = F_;
      account_energy(ledger_, r.out);
      r.out = FrameOutcome{};
      r.checked_in.clear();
      r.flagged.clear();
    }
    // Freed members that already left are no longer tracked by any cluster.
    for (NodeId id = 0; id < nodes().size(); ++id) {
      int i = aux_[id].cluster;
      if (i >= 0 && !cl_[i].cid_of(id)) aux_[id].cluster = -1;
    }
    std::erase_if(joins_, [&](const PendingJoin& j) { return !node(j.node).present; });
    for (int i : doomed) dissolve(i);
    if (!doomed.empty()) recolor();

    check_conservation(f);
  }

  std::uint64_t in_flight() const {
    std::uint64_t s = 0;
    for (const auto& a : aux_) s += a.intra_q.size() + a.inter_q.size();
    for (const auto& r : rt_) s += r.f3_q.size() + r.down_q.size();
    return s;
  }

  void check_conservation(int f) {
    std::uint64_t fly = in_flight();
    if (offered_ != delivered_ + lost_ + collided_ + fly) {
      throw SimError("packet conservation broken at frame " + std::to_string(f) + ": offered " +
                     std::to_string(offered_) + " vs " +
                     std::to_string(delivered_ + lost_ + collided_ + fly));
    }
    int ops = 0;
    double size = 0.0;
    double cms = 0.0;
    double head = 0.0;
    for (int i = 0; i < static_cast<int>(cl_.size()); ++i) {
      if (!operational(i)) continue;
      ++ops;
      for (const auto& [cid, id] : cl_[i].members) {
        if (!node(id).present) continue;
        size += 1;
        if (cid > kSchCid) cms += 1;
      }
      // The most drained head bounds the network lifetime.
      head = std::max(head, ledger_.consumed[*cl_[i].pch()]);
      if (auto s = cl_[i].sch(); dch() && s) head = std::max(head, ledger_.consumed[*s]);
    }
    cluster_slots_ += static_cast<double>(ops) * F_;
    if (opts_.keep_trace) {
      FrameTrace t;
      t.frame = f;
      t.offered = offered_;
      t.delivered = delivered_;
      t.lost = lost_;
      t.collided = collided_;
      t.in_flight = fly;
      t.clusters = ops;
      t.mean_cluster_size = ops ? size / ops : 0.0;
      t.mean_cm_count = ops ? cms / ops : 0.0;
      t.head_energy = head;
      rep_.trace.push_back(t);
    }
  }

  void run_frame(int f) {
    Tick t0 = static_cast<Tick>(f) * F_;
    q_.push(t0, EventKind::FrameBoundary);
    for (int s = 0; s < F_; ++s) {
      Tick now = t0 + s;
      drain(now, f);
      if (s < X_ && (dch() || s < C_)) reservation_slot(s);
      if (s == reply_at_) {
        for (int i = 0; i < static_cast<int>(cl_.size()); ++i) {
          if (operational(i)) allocate(i, t0);
        }
      }
      execute_intra(now);
      execute_f2m(now);
      contend(now, s);
    }
    frame_end(f);
  }

  void finish(int horizon) {
    rep_.frames = horizon;
    rep_.offered = offered_;
    rep_.delivered = delivered_;
    rep_.lost = lost_;
    rep_.collided = collided_;
    rep_.in_flight = in_flight();
    if (cluster_slots_ > 0) {
      rep_.throughput_intra = rep_.delivered_intra * l_ / cluster_slots_;
      rep_.throughput_inter = rep_.delivered_inter * l_ / cluster_slots_;
    }
    rep_.throughput_total = rep_.throughput_intra + rep_.throughput_inter;
    double total = 0.0;
    for (double c : ledger_.consumed) total += c;
    rep_.energy_consumed = ledger_.consumed.empty() ? 0.0 : total / ledger_.consumed.size();
    if (ledger_.frames_accounted > 0) {
      rep_.energy_dissipated = ledger_.E_diss / ledger_.frames_accounted;
      rep_.energy_r = ledger_.E_r / ledger_.frames_accounted;
    }
  }

  const ValidatedConfig& cfg_;
  Protocol proto_;
  RunOptions opts_;
  RandomStream rng_;
  Csma csma_;
  Weights w_;
  int F_ = 0;
  int X_ = 0;
  int C_ = 0;
  int reply_at_ = 0;
  int l_ = 1;
  double E_ = 0.0;
  double Ectl_ = 0.0;
  FrameSchedule sched_;

  Deployment dep_;
  std::vector<NodeAux> aux_;
  std::vector<Cluster> cl_;
  std::vector<ClusterRt> rt_;
  std::vector<PendingJoin> joins_;
  EventQueue q_;
  EnergyLedger ledger_;
  MetricsReport rep_;

  std::uint64_t offered_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t lost_ = 0;
  std::uint64_t collided_ = 0;
  std::uint64_t next_pkt_ = 0;
  double cluster_slots_ = 0.0;
};

}  // namespace

MetricsReport run_clustered(const ValidatedConfig& cfg, Protocol protocol, int horizon,
                            const RunOptions& opts) {
  Engine e(cfg, protocol, opts);
  return e.run(horizon);
}

}  // namespace dchmac::detail
