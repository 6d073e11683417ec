#include "dchmac/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dchmac/errors.hpp"

namespace dchmac {

Cluster::Cluster(NodeId id, int cap) : cluster_id(id), capacity(cap) {
  for (int c = 1; c <= cap; ++c) idle_cids.insert(static_cast<Cid>(c));
}

std::optional<NodeId> Cluster::pch() const {
  auto it = members.find(kPchCid);
  if (it == members.end()) return std::nullopt;
  return it->second;
}

std::optional<NodeId> Cluster::sch() const {
  auto it = members.find(kSchCid);
  if (it == members.end()) return std::nullopt;
  return it->second;
}

std::optional<Cid> Cluster::cid_of(NodeId id) const {
  for (const auto& [cid, n] : members) {
    if (n == id) return cid;
  }
  return std::nullopt;
}

std::vector<NodeId> Cluster::member_ids() const {
  std::vector<NodeId> ids;
  ids.reserve(members.size());
  for (const auto& [cid, n] : members) ids.push_back(n);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<Cid> Cluster::cm_cids() const {
  std::vector<Cid> out;
  for (const auto& [cid, n] : members) {
    if (cid > kSchCid) out.push_back(cid);
  }
  return out;
}

std::optional<Cid> Cluster::admit(NodeId id) {
  auto it = idle_cids.lower_bound(3);
  Cid cid;
  if (it != idle_cids.end()) {
    cid = *it;
  } else if (idle_cids.count(kSchCid) && !members.count(kSchCid)) {
    cid = kSchCid;
  } else {
    return std::nullopt;
  }
  place(cid, id);
  return cid;
}

void Cluster::place(Cid cid, NodeId id) {
  idle_cids.erase(cid);
  members[cid] = id;
  miss_counters.erase(cid);
}

void Cluster::release(Cid cid) {
  if (members.erase(cid)) idle_cids.insert(cid);
  miss_counters.erase(cid);
}

bool elect_tch(double p, int target_clusters, int total_nodes) {
  return p <= static_cast<double>(target_clusters) / static_cast<double>(total_nodes);
}

Weights Weights::normalized() const {
  double s = w1 + w2 + w3;
  return {w1 / s, w2 / s, w3 / s};
}

CfchScore compute_cfch(const NodeState& node, std::span<const NodeState> peers,
                       const Weights& w) {
  Vec2 mean_v;
  Vec2 mean_p;
  for (const auto& p : peers) {
    mean_v += p.velocity;
    mean_p += p.position;
  }
  double n = static_cast<double>(std::max<std::size_t>(peers.size(), 1));
  mean_v = mean_v * (1.0 / n);
  mean_p = mean_p * (1.0 / n);

  CfchScore s;
  s.energy = node.residual_energy;
  s.velocity_delta = (node.velocity - mean_v).norm();
  s.distance = (node.position - mean_p).norm();
  s.value = w.w1 * s.energy + w.w2 / std::max(s.velocity_delta, kCfchEpsilon) +
            w.w3 / std::max(s.distance, kCfchEpsilon);
  return s;
}

namespace {

void refresh_nav(const Cluster& c, std::vector<NodeState>& nodes) {
  for (const auto& [cid, id] : c.members) {
    for (const auto& [ocid, oid] : c.members) {
      const NodeState& o = nodes[oid];
      nodes[id].learn({oid, ocid, o.position, o.velocity});
    }
  }
}

std::vector<std::pair<double, NodeId>> ranked_scores(const Cluster& c,
                                                     const std::vector<NodeState>& nodes,
                                                     const Weights& w,
                                                     bool include_heads) {
  std::vector<NodeId> ids = c.member_ids();
  std::vector<std::pair<double, NodeId>> ranked;
  std::vector<NodeState> peers;
  for (NodeId id : ids) {
    auto cid = c.cid_of(id);
    if (!include_heads && cid && *cid <= kSchCid) continue;
    peers.clear();
    for (NodeId o : ids) {
      if (o != id) peers.push_back(nodes[o]);
    }
    ranked.emplace_back(compute_cfch(nodes[id], peers, w).value, id);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  return ranked;
}

}  // namespace

std::pair<NodeId, NodeId> select_heads(Cluster& c, std::vector<NodeState>& nodes,
                                       const Weights& w) {
  if (c.size() < 2) throw FormationError("head election needs at least two members");
  auto ranked = ranked_scores(c, nodes, w, true);
  NodeId pch = ranked[0].second;
  NodeId sch = ranked[1].second;

  Cid cp = *c.cid_of(pch);
  Cid cs = *c.cid_of(sch);
  std::optional<NodeId> h1 = c.pch();
  std::optional<NodeId> h2 = c.sch();

  std::vector<NodeId> displaced;
  for (auto h : {h1, h2}) {
    if (h && *h != pch && *h != sch) displaced.push_back(*h);
  }
  std::sort(displaced.begin(), displaced.end());
  std::vector<Cid> freed;
  for (Cid x : {cp, cs}) {
    if (x > kSchCid) freed.push_back(x);
  }
  std::sort(freed.begin(), freed.end());

  for (Cid x : {cp, cs, kPchCid, kSchCid}) c.release(x);
  c.place(kPchCid, pch);
  c.place(kSchCid, sch);
  for (std::size_t i = 0; i < displaced.size(); ++i) c.place(freed[i], displaced[i]);

  for (const auto& [cid, id] : c.members) {
    NodeState& n = nodes[id];
    n.cid = cid;
    n.role = cid == kPchCid ? Role::PCH : cid == kSchCid ? Role::SCH : Role::CM;
  }
  c.cluster_id = pch;
  refresh_nav(c, nodes);
  return {pch, sch};
}

FormationResult form_clusters_with(std::vector<NodeState>& nodes,
                                   std::span<const NodeId> members,
                                   std::span<const NodeId> initial_tchs,
                                   const ValidatedConfig& cfg, RandomStream& rng) {
  const double range = cfg->broadcast_range;
  const int cap = cfg->cluster_capacity;
  FormationResult out;
  std::vector<Cluster>& clusters = out.clusters;
  std::map<NodeId, std::size_t> by_tch;
  std::map<NodeId, std::set<NodeId>> refused;  // node -> TCHs that turned it down

  std::vector<NodeId> pool(members.begin(), members.end());
  std::sort(pool.begin(), pool.end());
  for (NodeId id : pool) {
    nodes[id].role = Role::Unclustered;
    nodes[id].cid = kNoCid;
    nodes[id].nav.clear();
  }

  auto declare = [&](NodeId id, int round, FormationEvent::Kind kind) {
    Cluster c(id, cap);
    c.place(kPchCid, id);
    nodes[id].role = Role::TCH;
    nodes[id].cid = kPchCid;
    by_tch[id] = clusters.size();
    clusters.push_back(std::move(c));
    out.events.push_back({kind, round, id, id, kPchCid});
    out.events.push_back({FormationEvent::Kind::Hello, round, id, id, kNoCid});
  };
  for (NodeId id : initial_tchs) declare(id, 1, FormationEvent::Kind::TchElected);

  auto options_for = [&](NodeId u) {
    std::vector<std::pair<double, NodeId>> opts;
    for (const auto& [tch, idx] : by_tch) {
      double d = distance(nodes[u].position, nodes[tch].position);
      if (d > range) continue;
      if (refused[u].count(tch)) continue;
      const Cluster& c = clusters[idx];
      if (c.idle_cids.empty()) continue;
      opts.emplace_back(d, tch);
    }
    std::sort(opts.begin(), opts.end());
    return opts;
  };

  auto announce = [&](std::size_t idx, const std::vector<std::pair<NodeId, Cid>>& accepted,
                      int round) {
    Cluster& c = clusters[idx];
    for (const auto& [id, cid] : accepted) {
      nodes[id].role = Role::CM;
      nodes[id].cid = cid;
      out.events.push_back({FormationEvent::Kind::Ajc, round, id, c.cluster_id, cid});
    }
    refresh_nav(c, nodes);
  };

  auto unclustered = [&] {
    std::vector<NodeId> u;
    for (NodeId id : pool) {
      if (nodes[id].role == Role::Unclustered) u.push_back(id);
    }
    return u;
  };

  int round = 1;
  for (; round <= kMaxFormationRounds; ++round) {
    auto waiting = unclustered();
    if (waiting.empty()) break;
    out.rounds = round;

    if (round <= kListenRounds) {
      std::map<NodeId, std::vector<std::pair<double, NodeId>>> rjc;
      for (NodeId u : waiting) {
        auto opts = options_for(u);
        if (opts.empty()) continue;
        rjc[opts.front().second].emplace_back(opts.front().first, u);
        out.events.push_back(
            {FormationEvent::Kind::Rjc, round, u, opts.front().second, kNoCid});
      }
      for (auto& [tch, reqs] : rjc) {
        std::sort(reqs.begin(), reqs.end());
        std::size_t idx = by_tch[tch];
        std::vector<std::pair<NodeId, Cid>> accepted;
        for (const auto& [d, u] : reqs) {
          if (auto cid = clusters[idx].admit(u)) {
            accepted.emplace_back(u, *cid);
          } else {
            refused[u].insert(tch);
          }
        }
        announce(idx, accepted, round);
      }
      continue;
    }

    // Listen window expired: remaining nodes self-declare in random order,
    // later ones joining any TCH declared before them.
    rng.shuffle(waiting);
    for (NodeId u : waiting) {
      auto opts = options_for(u);
      if (!opts.empty()) {
        std::size_t idx = by_tch[opts.front().second];
        auto cid = clusters[idx].admit(u);
        out.events.push_back(
            {FormationEvent::Kind::Rjc, round, u, opts.front().second, kNoCid});
        announce(idx, {{u, *cid}}, round);
      } else {
        declare(u, round, FormationEvent::Kind::SelfDeclared);
      }
    }
  }

  if (!unclustered().empty()) {
    throw FormationError("nodes left unclustered after " +
                         std::to_string(kMaxFormationRounds) + " rounds");
  }

  // Adjacent TCHs heard each other's HELLO.
  for (auto& c : clusters) {
    for (const auto& o : clusters) {
      if (o.cluster_id == c.cluster_id) continue;
      const NodeState& a = nodes[c.cluster_id];
      const NodeState& b = nodes[o.cluster_id];
      if (distance(a.position, b.position) <= range) {
        c.cnav.push_back({o.cluster_id, b.position, b.velocity});
        c.neighbor_clusters.push_back(o.cluster_id);
      }
    }
  }

  Weights w = Weights::from(cfg.get());
  for (auto& c : clusters) {
    if (c.size() >= 2) {
      NodeId tch = c.cluster_id;
      auto [p, s] = select_heads(c, nodes, w);
      out.events.push_back({FormationEvent::Kind::HeadsSelected, round, p, tch, kPchCid});
      out.events.push_back({FormationEvent::Kind::HeadsSelected, round, s, tch, kSchCid});
    } else {
      NodeId lone = c.members.begin()->second;
      nodes[lone].role = Role::PCH;
      nodes[lone].cid = kPchCid;
    }
  }
  return out;
}

FormationResult form_clusters(std::vector<NodeState>& nodes,
                              std::span<const NodeId> members,
                              const ValidatedConfig& cfg, RandomStream& rng) {
  std::vector<NodeId> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<NodeId> tchs;
  for (NodeId id : sorted) {
    if (elect_tch(rng.uniform(), cfg->target_clusters, cfg->total_nodes)) tchs.push_back(id);
  }
  return form_clusters_with(nodes, sorted, tchs, cfg, rng);
}

FormationResult form_clusters(std::vector<NodeState>& nodes, const ValidatedConfig& cfg,
                              RandomStream& rng) {
  std::vector<NodeId> all;
  for (const auto& n : nodes) {
    if (n.role != Role::Unclustered) {
      throw FormationError("form_clusters expects unclustered nodes");
    }
    if (n.alive()) all.push_back(n.id);
  }
  return form_clusters(nodes, all, cfg, rng);
}

MaintenanceActions maintain(Cluster& c, std::vector<NodeState>& nodes,
                            const FrameEvents& ev, const Weights& w) {
  MaintenanceActions out;
  std::set<Cid> seen(ev.checked_in.begin(), ev.checked_in.end());
  std::set<Cid> flagged(ev.flagged_absent.begin(), ev.flagged_absent.end());

  for (Cid cid : c.cm_cids()) {
    if (seen.count(cid)) {
      c.miss_counters[cid] = 0;
      continue;
    }
    int misses = ++c.miss_counters[cid];
    if (misses >= kMissesToFree || flagged.count(cid)) out.freed.push_back(cid);
  }
  for (Cid cid : out.freed) {
    NodeId id = c.members[cid];
    c.release(cid);
    if (nodes[id].cid == cid) {
      nodes[id].role = Role::Unclustered;
      nodes[id].cid = kNoCid;
    }
  }

  c.departure_window.push_back(static_cast<int>(out.freed.size()));
  while (static_cast<int>(c.departure_window.size()) > kDepartureWindowFrames) {
    c.departure_window.pop_front();
  }
  int recent = std::accumulate(c.departure_window.begin(), c.departure_window.end(), 0);
  if (recent > kDissolveFraction * c.capacity) out.dissolve = true;

  auto pch = c.pch();
  if (!pch || !nodes[*pch].alive()) out.dissolve = true;
  if (out.dissolve) return out;

  for (NodeId id : ev.join_requests) {
    if (c.cid_of(id)) continue;
    if (auto cid = c.admit(id)) {
      nodes[id].role = *cid == kSchCid ? Role::SCH : Role::CM;
      nodes[id].cid = *cid;
      out.admitted.emplace_back(id, *cid);
    } else {
      out.rejected.push_back(id);
    }
  }
  if (!out.admitted.empty()) refresh_nav(c, nodes);

  auto sch = c.sch();
  bool sch_weak = !sch || !nodes[*sch].alive() || nodes[*sch].residual_energy < kSchEnergyFloor;
  if (sch_weak) {
    for (const auto& [score, id] : ranked_scores(c, nodes, w, false)) {
      if (!nodes[id].alive() || nodes[id].residual_energy < kSchEnergyFloor) continue;
      Cid from = *c.cid_of(id);
      c.release(from);
      if (sch) {
        c.release(kSchCid);
        c.place(from, *sch);
        nodes[*sch].cid = from;
        nodes[*sch].role = Role::CM;
      }
      c.place(kSchCid, id);
      nodes[id].cid = kSchCid;
      nodes[id].role = Role::SCH;
      out.new_sch = id;
      refresh_nav(c, nodes);
      break;
    }
  }
  return out;
}

}  // namespace dchmac
