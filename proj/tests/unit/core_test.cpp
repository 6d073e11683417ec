#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "dchmac/config.hpp"
#include "dchmac/errors.hpp"
#include "dchmac/event_queue.hpp"
#include "dchmac/packet.hpp"
#include "dchmac/random.hpp"
#include "dchmac/types.hpp"

using namespace dchmac;

namespace {

void expect_config_error(ScenarioConfig c, const std::string& needle) {
  try {
    validate_config(c);
    FAIL() << "accepted an invalid config, expected: " << needle;
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(Config, DefaultsAreAccepted) {
  ScenarioConfig c;
  c.total_nodes = 200;
  c.target_clusters = 5;
  c.cluster_capacity = 50;
  ValidatedConfig v = validate_config(c);
  EXPECT_EQ(v->total_nodes, 200);
  EXPECT_EQ(v->frame_data_capacity, 100);
  EXPECT_EQ(v.frame_length(), 50 + 3 + 4 + 100);
}

TEST(Config, RejectsZeroClusters) {
  ScenarioConfig c;
  c.target_clusters = 0;
  expect_config_error(c, "M must be positive");
}

TEST(Config, RejectsWeightsNotSummingToOne) {
  ScenarioConfig c;
  c.w1 = c.w2 = c.w3 = 0.5;
  expect_config_error(c, "weights must sum to 1");
}

TEST(Config, RejectsOtherInvariants) {
  ScenarioConfig c;
  c.cluster_capacity = 1;
  expect_config_error(c, "X_M");
  c = {};
  c.relative_speed = 30;
  c.free_flow_speed = 20;
  expect_config_error(c, "v_r");
  c = {};
  c.packet_loss_prob = 1.5;
  expect_config_error(c, "P_lost");
  c = {};
  c.target_clusters = 300;
  expect_config_error(c, "M must not exceed N");
}

TEST(Config, ValidationIsIdempotent) {
  ScenarioConfig c;
  c.w1 = 0.2;
  c.w2 = 0.3;
  c.w3 = 0.5;
  ValidatedConfig once = validate_config(c);
  ValidatedConfig twice = validate_config(once.get());
  EXPECT_EQ(once.get(), twice.get());
}

TEST(Config, JsonRoundTripAndFieldAccess) {
  ScenarioConfig c;
  c.mobility_rate = 2.5;
  c.mobility_mode = MobilityMode::DepartOnly;
  c.rng_seed = 99;
  EXPECT_EQ(config_from_json(to_json(c)), c);

  set_config_field(c, "cluster_capacity", 17);
  EXPECT_EQ(c.cluster_capacity, 17);
  EXPECT_EQ(get_config_field(c, "cluster_capacity"), 17);
  EXPECT_THROW(set_config_field(c, "no_such_field", 1), ConfigError);
  EXPECT_THROW(set_config_field(c, "cluster_capacity", 2.5), ConfigError);
  EXPECT_TRUE(is_config_field("inter_arrival_rate"));
}

TEST(Config, LoadFromFile) {
  auto path = std::filesystem::temp_directory_path() / "dchmac_core_test_scenario.json";
  {
    std::ofstream f(path);
    f << R"({"total_nodes": 60, "target_clusters": 3, "mobility_mode": "population"})";
  }
  ScenarioConfig c = load_config(path.string());
  EXPECT_EQ(c.total_nodes, 60);
  EXPECT_EQ(c.target_clusters, 3);
  EXPECT_EQ(c.mobility_mode, MobilityMode::Population);
  {
    std::ofstream f(path);
    f << "{ not json";
  }
  EXPECT_THROW(load_config(path.string()), ConfigError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config(path.string()), IoError);
}

TEST(Random, SameSeedSameSequence) {
  RandomStream a = seeded_rng(42);
  RandomStream b = seeded_rng(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Random, DifferentSeedsDiffer) {
  RandomStream a = seeded_rng(1);
  RandomStream b = seeded_rng(2);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64();
  EXPECT_LT(same, 2);
}

TEST(Random, UniformMean) {
  RandomStream r = seeded_rng(7);
  double sum = 0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.01);
}

TEST(Random, PoissonAndExponentialMeans) {
  RandomStream r = seeded_rng(11);
  const int n = 200'000;
  double ps = 0, pl = 0, ex = 0;
  for (int i = 0; i < n; ++i) {
    ps += r.poisson(0.7);
    pl += r.poisson(40.0);
    ex += r.exponential(4.0);
  }
  EXPECT_NEAR(ps / n, 0.7, 0.01);
  EXPECT_NEAR(pl / n, 40.0, 0.1);
  EXPECT_NEAR(ex / n, 0.25, 0.005);
}

TEST(Random, BelowAndRangeStayInBounds) {
  RandomStream r = seeded_rng(3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70'000; ++i) ++hits[r.below(7)];
  for (int h : hits) EXPECT_NEAR(h, 10'000, 500);
  for (int i = 0; i < 1000; ++i) {
    auto v = r.range(-3, 3);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 3);
  }
}

TEST(Packet, EveryKindRoundTrips) {
  std::vector<Packet> samples;
  samples.push_back({1, kBroadcast, 1,
                     HelloBody{1, 1, {3.5, -2.0}, {1.0, 0.25}, 0.875, 50}});
  samples.push_back({7, 1, 1, RjcBody{7, {10, 20}, {0, -1}, 0.5, Application::Quit}});
  samples.push_back({1, kBroadcast, 1,
                     AjcBody{1, {{7, 3}, {9, 4}}, {0.5, 0.5}, {2, 2}, 0.99, 46}});
  samples.push_back({9, 1, 1, ReservationBody{2, 1, 12}});
  samples.push_back({1, kBroadcast, 1,
                     ReplyBody{{{5, 9, 2, ChannelId::f2v(3)}, {6, 7, 1, ChannelId::f2m(3)}}}});
  samples.push_back({9, 2, 4, DataBody{123456, 9, 44}});
  samples.push_back({1, kBroadcast, 1, AjcBody{}});
  samples.push_back({1, kBroadcast, 1, ReplyBody{}});

  for (const Packet& p : samples) {
    std::vector<std::uint8_t> bytes = encode(p);
    ASSERT_FALSE(bytes.empty());
    EXPECT_EQ(bytes[0], static_cast<std::uint8_t>(p.kind()));
    EXPECT_EQ(decode(bytes), p);
  }
}

TEST(Packet, HeaderIsLittleEndian) {
  Packet p{0x01020304u, 0x0A0B0C0Du, 0x0506, DataBody{}};
  auto b = encode(p);
  ASSERT_GE(b.size(), 11u);
  EXPECT_EQ(b[0], static_cast<std::uint8_t>(PacketKind::Data));
  EXPECT_EQ(b[1], 0x04);
  EXPECT_EQ(b[4], 0x01);
  EXPECT_EQ(b[5], 0x0D);
  EXPECT_EQ(b[9], 0x06);
  EXPECT_EQ(b[10], 0x05);
}

TEST(Packet, TruncatedOrUnknownInputIsRejected) {
  auto b = encode({9, 1, 1, ReservationBody{2, 1, 12}});
  b.pop_back();
  EXPECT_THROW(decode(b), DecodeError);
  std::vector<std::uint8_t> junk{0xEE, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0};
  EXPECT_THROW(decode(junk), DecodeError);
  EXPECT_THROW(decode(std::vector<std::uint8_t>{}), DecodeError);
}

TEST(EventQueue, OrdersByTickThenKindThenInsertion) {
  EventQueue q;
  q.push(5, EventKind::PacketArrival, 1);
  q.push(3, EventKind::SlotBoundary, 2);
  q.push(5, EventKind::FrameBoundary, 3);
  q.push(5, EventKind::PacketArrival, 4);
  q.push(3, EventKind::NodeDeparture, 5);

  std::vector<NodeId> order;
  while (auto e = q.pop()) order.push_back(e->node);
  EXPECT_EQ(order, (std::vector<NodeId>{5, 2, 3, 1, 4}));
}

TEST(EventQueue, RefusesEventsInThePast) {
  EventQueue q;
  q.push(10, EventKind::SlotBoundary);
  q.pop();
  EXPECT_EQ(q.now(), 10);
  EXPECT_THROW(q.push(9, EventKind::SlotBoundary), SimError);
  EXPECT_NO_THROW(q.push(10, EventKind::SlotBoundary));
}

TEST(Types, ChannelNamesAndNavLearning) {
  EXPECT_NE(ChannelId::f2m(1), ChannelId::f2v(1));
  EXPECT_NE(ChannelId::f2m(1), ChannelId::f2m(2));
  NodeState n;
  n.learn({4, 3, {1, 1}, {0, 0}});
  n.learn({4, 5, {2, 2}, {0, 0}});
  ASSERT_EQ(n.nav.size(), 1u);
  EXPECT_EQ(n.nav[0].cid, 5);
  n.residual_energy = 0.0;
  EXPECT_FALSE(n.alive());
}
