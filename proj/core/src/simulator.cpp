#include "dchmac/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dchmac/errors.hpp"
#include "sim_internal.hpp"

namespace dchmac {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::DCHMAC: return "DCHMAC";
    case Protocol::FMMAC: return "FMMAC";
    case Protocol::FLAT80211: return "FLAT80211";
  }
  return "?";
}

Protocol protocol_from_string(std::string_view s) {
  std::string u(s);
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  std::erase_if(u, [](char c) { return c == '-' || c == '_' || c == '.'; });
  if (u == "DCHMAC") return Protocol::DCHMAC;
  if (u == "FMMAC") return Protocol::FMMAC;
  if (u == "FLAT80211" || u == "FLAT" || u == "80211") return Protocol::FLAT80211;
  throw ConfigError("unknown protocol '" + std::string(s) + "'");
}

void EnergyLedger::charge(NodeId id, double amount) {
  if (id >= consumed.size()) consumed.resize(id + 1, 0.0);
  consumed[id] += amount;
}

EnergyBreakdown account_energy(EnergyLedger& ledger, const FrameOutcome& f) {
  EnergyInputs in;
  in.E_elec = f.E_elec;
  in.E_packet1 = f.packet_slots;
  in.E_packet2 = f.packet_slots;
  double n1 = f.N_s1 + f.N_c1;
  double n2 = f.N_s2 + f.N_c2;
  in.P_succ1 = n1 > 0 ? f.N_s1 / n1 : 0.0;
  in.P_lost = f.P_lost;
  in.P_c = n2 > 0 ? f.N_c2 / n2 : 0.0;
  in.P_s = n2 > 0 ? f.N_s2 / n2 : 0.0;
  in.N_s1 = f.N_s1;
  in.N_c1 = f.N_c1;
  in.N_s2 = f.N_s2;
  in.N_c2 = f.N_c2;
  in.T_s1 = f.T_s1;
  in.T_c1 = f.T_c1;
  in.T_s2 = f.T_s2;
  in.T_c2 = f.T_c2;
  double F = std::max(f.frame_len, 1);
  in.S_i1 = in.E_packet1 * in.P_succ1 * f.N_s1 * f.T_s1 / F;
  in.S_i2 = in.E_packet2 * in.P_s * f.N_s2 * f.T_s2 / F;
  in.T_s = F * f.E_elec;

  EnergyBreakdown e = energy_closed_form(in);
  ledger.E_ira += e.E_ira;
  ledger.E_itr += e.E_itr;
  ledger.E_r += e.E_r;
  ledger.E_diss += e.E_diss;
  ledger.N_s1 += f.N_s1;
  ledger.N_c1 += f.N_c1;
  ledger.N_s2 += f.N_s2;
  ledger.N_c2 += f.N_c2;
  ++ledger.frames_accounted;
  return e;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["protocol"] = std::string(dchmac::to_string(protocol));
  j["frames"] = frames;
  j["frame_length"] = frame_length;
  j["frame_duration"] = frame_duration;
  j["throughput_total"] = throughput_total;
  j["throughput_intra"] = throughput_intra;
  j["throughput_inter"] = throughput_inter;
  j["offered"] = offered;
  j["delivered"] = delivered;
  j["lost"] = lost;
  j["collided"] = collided;
  j["in_flight"] = in_flight;
  j["delivered_intra"] = delivered_intra;
  j["delivered_inter"] = delivered_inter;
  j["intra_slots_ok"] = intra_slots_ok;
  j["f2m_slots_ok"] = f2m_slots_ok;
  j["f3_slots_ok"] = f3_slots_ok;
  j["f3_attempts"] = f3_attempts;
  j["f3_collisions"] = f3_collisions;
  j["f2v_collisions"] = f2v_collisions;
  j["slot_conflicts"] = slot_conflicts;
  j["dead_sender_violations"] = dead_sender_violations;
  j["dissolutions"] = dissolutions;
  j["energy_consumed"] = energy_consumed;
  j["energy_dissipated"] = energy_dissipated;
  j["energy_r"] = energy_r;
  auto& t = j["trace"] = nlohmann::json::array();
  for (const auto& f : trace) {
    t.push_back({{"frame", f.frame},
                 {"offered", f.offered},
                 {"delivered", f.delivered},
                 {"lost", f.lost},
                 {"collided", f.collided},
                 {"in_flight", f.in_flight},
                 {"clusters", f.clusters},
                 {"mean_cluster_size", f.mean_cluster_size},
                 {"mean_cm_count", f.mean_cm_count},
                 {"head_energy", f.head_energy}});
  }
  return j;
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport m;
  m.protocol = protocol_from_string(j.at("protocol").get<std::string>());
  j.at("frames").get_to(m.frames);
  j.at("frame_length").get_to(m.frame_length);
  j.at("frame_duration").get_to(m.frame_duration);
  j.at("throughput_total").get_to(m.throughput_total);
  j.at("throughput_intra").get_to(m.throughput_intra);
  j.at("throughput_inter").get_to(m.throughput_inter);
  j.at("offered").get_to(m.offered);
  j.at("delivered").get_to(m.delivered);
  j.at("lost").get_to(m.lost);
  j.at("collided").get_to(m.collided);
  j.at("in_flight").get_to(m.in_flight);
  j.at("delivered_intra").get_to(m.delivered_intra);
  j.at("delivered_inter").get_to(m.delivered_inter);
  j.at("intra_slots_ok").get_to(m.intra_slots_ok);
  j.at("f2m_slots_ok").get_to(m.f2m_slots_ok);
  j.at("f3_slots_ok").get_to(m.f3_slots_ok);
  j.at("f3_attempts").get_to(m.f3_attempts);
  j.at("f3_collisions").get_to(m.f3_collisions);
  j.at("f2v_collisions").get_to(m.f2v_collisions);
  j.at("slot_conflicts").get_to(m.slot_conflicts);
  j.at("dead_sender_violations").get_to(m.dead_sender_violations);
  j.at("dissolutions").get_to(m.dissolutions);
  j.at("energy_consumed").get_to(m.energy_consumed);
  j.at("energy_dissipated").get_to(m.energy_dissipated);
  j.at("energy_r").get_to(m.energy_r);
  if (auto it = j.find("trace"); it != j.end()) {
    for (const auto& f : *it) {
      FrameTrace t;
      f.at("frame").get_to(t.frame);
      f.at("offered").get_to(t.offered);
      f.at("delivered").get_to(t.delivered);
      f.at("lost").get_to(t.lost);
      f.at("collided").get_to(t.collided);
      f.at("in_flight").get_to(t.in_flight);
      f.at("clusters").get_to(t.clusters);
      f.at("mean_cluster_size").get_to(t.mean_cluster_size);
      f.at("mean_cm_count").get_to(t.mean_cm_count);
      f.at("head_energy").get_to(t.head_energy);
      m.trace.push_back(t);
    }
  }
  return m;
}

namespace {

Vec2 random_in_disc(double radius, RandomStream& rng) {
  double r = radius * std::sqrt(rng.uniform());
  double a = 2.0 * std::numbers::pi * rng.uniform();
  return {r * std::cos(a), r * std::sin(a)};
}

Vec2 random_direction(double magnitude, RandomStream& rng) {
  double a = 2.0 * std::numbers::pi * rng.uniform();
  return {magnitude * std::cos(a), magnitude * std::sin(a)};
}

}  // namespace

Deployment deploy(const ValidatedConfig& cfg, RandomStream& rng) {
  Deployment d;
  int M = cfg->target_clusters;
  int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(M))));
  double spacing = kGroupSpacing * cfg->broadcast_range;
  for (int g = 0; g < M; ++g) {
    d.centers.push_back({(g % cols) * spacing, (g / cols) * spacing});
  }
  d.group_radius = kGroupRadius * cfg->broadcast_range;
  d.swarm_velocity = random_direction(cfg->free_flow_speed, rng);
  for (int i = 0; i < cfg->total_nodes; ++i) add_node(d, i % M, cfg, rng);
  // First arrivals are the initial population, not a rim insertion.
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    d.offsets[i] = random_in_disc(d.group_radius, rng);
    d.nodes[i].position = d.centers[d.group[i]] + d.offsets[i];
  }
  return d;
}

NodeId add_node(Deployment& d, int g, const ValidatedConfig& cfg, RandomStream& rng) {
  NodeState n;
  n.id = static_cast<NodeId>(d.nodes.size());
  Vec2 off = random_direction(d.group_radius, rng);
  Vec2 rel = random_direction(cfg->relative_speed * rng.uniform(), rng);
  n.position = d.centers[g] + off;
  n.velocity = d.swarm_velocity + rel;
  d.nodes.push_back(n);
  d.group.push_back(g);
  d.offsets.push_back(off);
  d.relative.push_back(rel);
  return n.id;
}

MobilityEvents mobility_step(Deployment& d, std::span<const Cluster> clusters,
                             const ValidatedConfig& cfg, RandomStream& rng,
                             bool second_seat_is_member) {
  double dt = cfg.frame_duration();
  for (auto& c : d.centers) c += d.swarm_velocity * dt;
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    NodeState& n = d.nodes[i];
    if (!n.present) continue;
    Vec2 off = d.offsets[i] + d.relative[i] * dt;
    double r = off.norm();
    if (r > d.group_radius) {
      Vec2 u = off * (1.0 / r);
      off = u * (2.0 * d.group_radius - r);
      Vec2& v = d.relative[i];
      double radial = v.x * u.x + v.y * u.y;
      v = v - u * (2.0 * radial);
    }
    d.offsets[i] = off;
    n.position = d.centers[d.group[i]] + off;
    n.velocity = d.swarm_velocity + d.relative[i];
  }

  MobilityEvents ev;
  const auto mode = cfg->mobility_mode;
  std::vector<int> live;
  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    const Cluster& c = clusters[ci];
    if (!c.operational()) continue;
    live.push_back(static_cast<int>(ci));
    std::vector<NodeId> cms;
    if (auto s = c.sch(); second_seat_is_member && s && d.nodes[*s].present) cms.push_back(*s);
    for (Cid cid : c.cm_cids()) {
      NodeId id = c.members.at(cid);
      if (d.nodes[id].present && d.nodes[id].role == Role::CM) cms.push_back(id);
    }
    double p_leave;
    if (mode == MobilityMode::Population) {
      p_leave = -std::expm1(-dt / cfg->markov_period);
    } else {
      // Rate is per cluster at the nominal size N/M. Holding it per node
      // stops fragmentation from multiplying churn.
      double nominal = static_cast<double>(cfg->total_nodes) / cfg->target_clusters;
      p_leave = std::min(1.0, cfg->mobility_rate / std::max(1.0, nominal - 1.0));
    }
    if (p_leave > 0.0) {
      for (NodeId id : cms) {
        if (!rng.bernoulli(p_leave)) continue;
        ev.departures.push_back(id);
        // One newcomer per leaver keeps the swarm size fixed; independent
        // arrival draws let it random-walk far from N within a run.
        if (mode == MobilityMode::Replace) ev.arrivals.push_back(static_cast<int>(ci));
      }
    }
  }
  // Population arrivals are a swarm-wide stream spread over live clusters.
  if (mode == MobilityMode::Population && !live.empty()) {
    double mean = population_model(cfg.get()).lambda1 * dt * cfg->target_clusters;
    std::uint32_t k = rng.poisson(mean);
    for (std::uint32_t a = 0; a < k; ++a) {
      ev.arrivals.push_back(live[rng.below(live.size())]);
    }
  }
  return ev;
}

MetricsReport run(const ValidatedConfig& cfg, Protocol protocol, int horizon,
                  const RunOptions& opts) {
  if (horizon < 0) throw ConfigError("horizon must be non-negative");
  if (protocol == Protocol::FLAT80211) return detail::run_flat(cfg, horizon, opts);
  return detail::run_clustered(cfg, protocol, horizon, opts);
}

}  // namespace dchmac
