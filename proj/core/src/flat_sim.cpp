#include <algorithm>
#include <deque>
#include <string>

#include "dchmac/errors.hpp"
#include "dchmac/event_queue.hpp"
#include "sim_internal.hpp"

namespace dchmac::detail {

// Single shared channel, every node contends for itself.
MetricsReport run_flat(const ValidatedConfig& cfg, int horizon, const RunOptions& opts) {
  RandomStream rng = seeded_rng(cfg->rng_seed);
  Deployment dep = deploy(cfg, rng);
  auto& nodes = dep.nodes;
  const std::size_t N = nodes.size();
  const int F = cfg.frame_length();
  const double R = cfg->broadcast_range;
  const double E = cfg->energy_per_packet;
  const int l = cfg->payload_slots;

  Csma csma({cfg->min_window, cfg->max_backoff_stage}, R, R, cfg->tx_success_time,
            cfg->retry_limit);
  csma.resize(N);
  std::vector<std::deque<NodeId>> queue(N);
  EnergyLedger ledger;
  ledger.consumed.assign(N, 0.0);
  EventQueue q;
  MetricsReport rep;
  rep.protocol = Protocol::FLAT80211;
  rep.frame_length = F;
  rep.frame_duration = cfg.frame_duration();

  std::uint64_t offered = 0, delivered = 0, lost = 0, collided = 0;
  std::vector<Cluster> none;
  double rate = (cfg->intra_arrival_rate + cfg->inter_arrival_rate) * cfg.frame_duration();

  auto charge = [&](NodeId id, double amount, bool tx) {
    if (tx && nodes[id].residual_energy <= 0.0) ++rep.dead_sender_violations;
    ledger.charge(id, amount);
    nodes[id].residual_energy = std::max(0.0, nodes[id].residual_energy - amount);
  };

  FrameOutcome out;
  for (int f = 0; f < horizon; ++f) {
    Tick t0 = static_cast<Tick>(f) * F;
    mobility_step(dep, none, cfg, rng);
    for (std::size_t i = 0; i < N; ++i) csma.st[i].pos = nodes[i].position;
    if (rate > 0.0) {
      for (std::size_t i = 0; i < N; ++i) {
        if (!nodes[i].alive()) continue;
        std::uint32_t k = rng.poisson(rate);
        for (std::uint32_t a = 0; a < k; ++a) {
          q.push(t0 + rng.below(F), EventKind::PacketArrival, static_cast<NodeId>(i));
        }
      }
    }

    for (int s = 0; s < F; ++s) {
      Tick now = t0 + s;
      while (auto t = q.peek_tick()) {
        if (*t > now) break;
        Event e = *q.pop();
        NodeId src = e.node;
        std::vector<NodeId> near;
        for (std::size_t j = 0; j < N; ++j) {
          if (j != src && nodes[j].alive() &&
              distance(nodes[j].position, nodes[src].position) <= R) {
            near.push_back(static_cast<NodeId>(j));
          }
        }
        if (near.empty()) continue;
        ++offered;
        if (static_cast<int>(queue[src].size()) >= cfg->queue_limit) {
          ++lost;
          continue;
        }
        queue[src].push_back(near[rng.below(near.size())]);
      }

      csma.step(
          rng, [&](int i) { return !queue[i].empty() && nodes[i].alive(); },
          [](int) { return true; },
          [&](int i) -> int {
            NodeId d = queue[i].front();
            if (!nodes[d].alive() || distance(nodes[d].position, nodes[i].position) > R) {
              queue[i].pop_front();
              ++lost;
              return -1;
            }
            return static_cast<int>(d);
          },
          [](int) { return false; },
          [&](int i, bool ok) {
            ++rep.f3_attempts;
            charge(i, E * l * cfg->tx_success_time, true);
            if (!ok) {
              ++rep.f3_collisions;
              out.N_c2 += 1;
              return;
            }
            NodeId d = queue[i].front();
            queue[i].pop_front();
            charge(d, E * l, false);
            ++delivered;
            ++rep.delivered_inter;
            rep.f3_slots_ok += l;
            out.N_s2 += 1;
          },
          [&](int i) {
            queue[i].pop_front();
            ++collided;
          });
    }

    std::uint64_t fly = 0;
    for (const auto& qq : queue) fly += qq.size();
    if (offered != delivered + lost + collided + fly) {
      throw SimError("packet conservation broken at frame " + std::to_string(f));
    }

    out.T_s2 = cfg->tx_success_time;
    out.T_c2 = cfg->tx_collision_time;
    out.packet_slots = l;
    out.P_lost = cfg->packet_loss_prob;
    out.E_elec = E;
    out.frame_len = F;
    account_energy(ledger, out);
    out = FrameOutcome{};

    if (opts.keep_trace) {
      double total = 0.0;
      for (double c : ledger.consumed) total += c;
      FrameTrace t;
      t.frame = f;
      t.offered = offered;
      t.delivered = delivered;
      t.lost = lost;
      t.collided = collided;
      t.in_flight = fly;
      t.clusters = cfg->target_clusters;
      t.head_energy = total / N;
      rep.trace.push_back(t);
    }
  }

  rep.frames = horizon;
  rep.offered = offered;
  rep.delivered = delivered;
  rep.lost = lost;
  rep.collided = collided;
  for (const auto& qq : queue) rep.in_flight += qq.size();
  double elapsed = static_cast<double>(horizon) * F * cfg->target_clusters;
  if (elapsed > 0) rep.throughput_inter = rep.f3_slots_ok / elapsed;
  rep.throughput_total = rep.throughput_inter;
  double total = 0.0;
  for (double c : ledger.consumed) total += c;
  rep.energy_consumed = N ? total / N : 0.0;
  // The whole network is one contention domain; spread it over the regions.
  if (ledger.frames_accounted > 0) {
    double per = static_cast<double>(ledger.frames_accounted) * cfg->target_clusters;
    rep.energy_dissipated = ledger.E_diss / per;
    rep.energy_r = ledger.E_r / per;
  }
  return rep;
}

}  // namespace dchmac::detail
