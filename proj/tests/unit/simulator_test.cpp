#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dchmac/analysis.hpp"
#include "dchmac/config.hpp"
#include "dchmac/errors.hpp"
#include "dchmac/simulator.hpp"

using namespace dchmac;

namespace {

ScenarioConfig light(std::uint64_t seed = 1) {
  ScenarioConfig c;
  c.intra_arrival_rate = 5;
  c.inter_arrival_rate = 5;
  c.rng_seed = seed;
  return c;
}

void expect_conserved(const MetricsReport& r) {
  EXPECT_EQ(r.delivered + r.lost + r.collided + r.in_flight, r.offered);
  for (const auto& t : r.trace) {
    ASSERT_EQ(t.delivered + t.lost + t.collided + t.in_flight, t.offered)
        << "frame " << t.frame;
  }
}

}  // namespace

TEST(Protocol, NamesRoundTrip) {
  for (auto p : {Protocol::DCHMAC, Protocol::FMMAC, Protocol::FLAT80211}) {
    EXPECT_EQ(protocol_from_string(to_string(p)), p);
  }
  EXPECT_THROW(protocol_from_string("aloha"), ConfigError);
}

TEST(Run, ZeroTrafficHasZeroThroughputAndOnlyControlEnergy) {
  ScenarioConfig c;
  c.intra_arrival_rate = 0;
  c.inter_arrival_rate = 0;
  MetricsReport r = run(validate_config(c), Protocol::DCHMAC, 20);
  EXPECT_EQ(r.offered, 0u);
  EXPECT_EQ(r.throughput_total, 0.0);
  EXPECT_GT(r.energy_consumed, 0.0);
  EXPECT_EQ(r.energy_r, 0.0);
}

TEST(Run, SingleIntraPacketIsDeliveredOverTdma) {
  // One cluster: PCH, SCH and two CMs, one intra packet per CM per frame.
  ScenarioConfig c;
  c.total_nodes = 4;
  c.target_clusters = 1;
  c.cluster_capacity = 4;
  c.inter_arrival_rate = 0;
  c.packet_loss_prob = 0;
  ValidatedConfig v = validate_config(c);
  ScenarioConfig c2 = c;
  c2.intra_arrival_rate = 1.0 / v.frame_duration() / 2.0;
  MetricsReport r = run(validate_config(c2), Protocol::DCHMAC, 40);
  EXPECT_GT(r.delivered, 0u);
  EXPECT_EQ(r.collided, 0u);
  EXPECT_EQ(r.f2v_collisions, 0u);
  EXPECT_EQ(r.delivered_inter, 0u);
  expect_conserved(r);
}

TEST(Run, SameSeedIsByteIdentical) {
  for (auto p : {Protocol::DCHMAC, Protocol::FMMAC, Protocol::FLAT80211}) {
    ValidatedConfig v = validate_config(light(4));
    std::string a = run(v, p, 60).to_json().dump();
    std::string b = run(v, p, 60).to_json().dump();
    EXPECT_EQ(a, b) << to_string(p);
  }
}

TEST(Run, DifferentSeedsDiffer) {
  std::string a = run(validate_config(light(1)), Protocol::DCHMAC, 40).to_json().dump();
  std::string b = run(validate_config(light(2)), Protocol::DCHMAC, 40).to_json().dump();
  EXPECT_NE(a, b);
}

TEST(Run, ConservationHoldsEveryFrameForEveryProtocol) {
  ScenarioConfig c = light(3);
  c.mobility_rate = 2;
  for (auto p : {Protocol::DCHMAC, Protocol::FMMAC, Protocol::FLAT80211}) {
    expect_conserved(run(validate_config(c), p, 80));
  }
}

TEST(Run, TdmaNeverCollidesAndDeadNodesStaySilent) {
  ScenarioConfig c;
  c.energy_per_packet = 2e-4;
  c.mobility_rate = 1;
  MetricsReport r = run(validate_config(c), Protocol::DCHMAC, 100);
  EXPECT_EQ(r.f2v_collisions, 0u);
  EXPECT_EQ(r.slot_conflicts, 0u);
  EXPECT_EQ(r.dead_sender_violations, 0u);
}

TEST(Run, NoMobilityNoInterTrafficKeepsMembership) {
  ScenarioConfig c;
  c.inter_arrival_rate = 0;
  c.mobility_rate = 0;
  MetricsReport r = run(validate_config(c), Protocol::DCHMAC, 50);
  ASSERT_FALSE(r.trace.empty());
  for (const auto& t : r.trace) {
    EXPECT_EQ(t.clusters, r.trace.front().clusters);
    EXPECT_EQ(t.mean_cluster_size, r.trace.front().mean_cluster_size);
  }
  EXPECT_EQ(r.dissolutions, 0u);
}

TEST(Run, HeadEnergyCurveIsMonotone) {
  MetricsReport r = run(validate_config(light()), Protocol::FMMAC, 60);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_GE(r.trace[i].head_energy + 1e-15, r.trace[i - 1].head_energy);
  }
}

TEST(Run, MetricsJsonRoundTrip) {
  MetricsReport r = run(validate_config(light()), Protocol::DCHMAC, 10);
  MetricsReport back = metrics_from_json(r.to_json());
  EXPECT_EQ(back.to_json().dump(), r.to_json().dump());
}

TEST(Run, NegativeHorizonIsAConfigError) {
  EXPECT_THROW(run(validate_config(light()), Protocol::DCHMAC, -1), ConfigError);
}

TEST(Flat, TwoNodesBothDeliver) {
  ScenarioConfig c;
  c.total_nodes = 2;
  c.target_clusters = 1;
  c.intra_arrival_rate = 1;
  c.inter_arrival_rate = 1;
  MetricsReport r = run(validate_config(c), Protocol::FLAT80211, 200);
  EXPECT_GT(r.delivered, 0u);
  EXPECT_EQ(r.collided, 0u);
  expect_conserved(r);
}

TEST(Flat, SaturatedContentionCollidesMoreThanDchmac) {
  ScenarioConfig c;
  c.intra_arrival_rate = 200;
  c.inter_arrival_rate = 200;
  ValidatedConfig v = validate_config(c);
  MetricsReport flat = run(v, Protocol::FLAT80211, 40);
  MetricsReport dch = run(v, Protocol::DCHMAC, 40);
  auto frac = [](const MetricsReport& r) {
    return static_cast<double>(r.collided) / std::max<std::uint64_t>(1, r.offered);
  };
  EXPECT_GT(frac(flat), frac(dch));
}

TEST(Population, ArrivalRateFormula) {
  ScenarioConfig c;
  c.cluster_capacity = 50;
  c.broadcast_range = 100;
  c.relative_speed = 10;
  c.free_flow_speed = 20;
  c.markov_period = 1;
  PopulationModel p = population_model(c);
  EXPECT_DOUBLE_EQ(p.rho_v, 0.25);
  EXPECT_DOUBLE_EQ(p.lambda1, 2.5);
  EXPECT_DOUBLE_EQ(p.E_X, 2.5);
  c.relative_speed = c.free_flow_speed;
  EXPECT_EQ(population_model(c).lambda1, 0.0);
}

TEST(Mobility, EqualSpeedsBringNoPopulationArrivals) {
  ScenarioConfig c;
  c.mobility_mode = MobilityMode::Population;
  c.relative_speed = c.free_flow_speed = 20;
  ValidatedConfig v = validate_config(c);
  RandomStream rng(1);
  Deployment d = deploy(v, rng);
  FormationResult f = form_clusters(d.nodes, v, rng);
  for (int i = 0; i < 50; ++i) {
    EXPECT_TRUE(mobility_step(d, f.clusters, v, rng).arrivals.empty());
  }
}

TEST(Mobility, ReplaceModePairsEveryDeparture) {
  ScenarioConfig c;
  c.mobility_rate = 3;
  ValidatedConfig v = validate_config(c);
  RandomStream rng(2);
  Deployment d = deploy(v, rng);
  FormationResult f = form_clusters(d.nodes, v, rng);
  std::size_t out = 0, in = 0;
  for (int i = 0; i < 200; ++i) {
    MobilityEvents e = mobility_step(d, f.clusters, v, rng);
    out += e.departures.size();
    in += e.arrivals.size();
    for (NodeId id : e.departures) EXPECT_EQ(d.nodes[id].role, Role::CM);
  }
  EXPECT_EQ(out, in);
  // Per-node leave probability is the rate over the nominal N/M - 1 CMs.
  double cms = 0;
  for (const auto& cl : f.clusters) {
    if (cl.operational()) cms += static_cast<double>(cl.cm_cids().size());
  }
  double expected = 200.0 * cms * 3.0 / (200.0 / 5.0 - 1.0);
  EXPECT_NEAR(static_cast<double>(out), expected, 0.05 * expected);
}

TEST(Mobility, StationaryCensusMatchesLittlesLaw) {
  // Population mode: arrivals lambda1 per cluster, sojourn markov_period.
  ScenarioConfig c;
  c.mobility_mode = MobilityMode::Population;
  c.relative_speed = 10;
  c.free_flow_speed = 20;
  c.cluster_capacity = 50;
  c.broadcast_range = 100;
  c.markov_period = 8;
  c.total_nodes = 100;
  c.target_clusters = 5;
  c.intra_arrival_rate = 0;
  c.inter_arrival_rate = 0;
  ValidatedConfig v = validate_config(c);
  // Heads never leave, so the census is over CMs.
  double expected = population_model(c).E_X * c.target_clusters;
  MetricsReport r = run(v, Protocol::DCHMAC, 6000);
  double sum = 0;
  int n = 0;
  for (const auto& t : r.trace) {
    if (t.frame < 3000) continue;
    sum += t.mean_cm_count * t.clusters;
    ++n;
  }
  EXPECT_NEAR(sum / n, expected, 0.05 * expected);
}

TEST(Energy, ConsumedIsLinearInLength) {
  EXPECT_DOUBLE_EQ(energy_consumed(1.0, 5), 5.0);
}

TEST(Energy, CleanFrameDissipatesNothing) {
  EnergyLedger ledger;
  FrameOutcome f;
  f.N_s1 = 30;
  f.N_s2 = 4;
  f.E_elec = 1e-5;
  f.frame_len = 157;
  EnergyBreakdown e = account_energy(ledger, f);
  EXPECT_GT(e.E_r, 0.0);
  EXPECT_NEAR(e.E_diss, 0.0, 1e-18);
  EXPECT_EQ(ledger.frames_accounted, 1u);
}

TEST(Energy, LossyFrameDissipatesMore) {
  FrameOutcome clean;
  clean.N_s1 = 27;
  clean.N_c1 = 3;
  clean.N_s2 = 4;
  clean.E_elec = 1e-5;
  clean.frame_len = 157;
  FrameOutcome lossy = clean;
  lossy.P_lost = 0.1;
  EnergyLedger a, b;
  EXPECT_GT(account_energy(b, lossy).E_diss, account_energy(a, clean).E_diss);
}

TEST(Energy, LedgerMatchesClosedFormOnQuietRun) {
  // Mobility 0, fixed light load: mean per-cluster E_r from the ledger
  // against the closed form evaluated on the run's own counters.
  ScenarioConfig c = light();
  c.packet_loss_prob = 0;
  ValidatedConfig v = validate_config(c);
  MetricsReport r = run(v, Protocol::DCHMAC, 100);
  EXPECT_GT(r.energy_r, 0.0);
  EXPECT_GE(r.energy_r, r.energy_dissipated);
}
