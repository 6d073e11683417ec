#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "dchmac/clustering.hpp"
#include "dchmac/config.hpp"
#include "dchmac/errors.hpp"
#include "dchmac/random.hpp"
#include "dchmac/simulator.hpp"

using namespace dchmac;

namespace {

std::vector<NodeState> line_of(int n, double spacing) {
  std::vector<NodeState> v(n);
  for (int i = 0; i < n; ++i) {
    v[i].id = static_cast<NodeId>(i);
    v[i].position = {i * spacing, 0.0};
  }
  return v;
}

ValidatedConfig small_cfg(int n = 10, int m = 1, int cap = 50) {
  ScenarioConfig c;
  c.total_nodes = n;
  c.target_clusters = m;
  c.cluster_capacity = cap;
  return validate_config(c);
}

// Operational cluster with PCH 0, SCH 1 and CMs 2.. on CIDs 3..
Cluster staffed(std::vector<NodeState>& nodes, int cms, int capacity = 50) {
  Cluster c(0, capacity);
  c.place(kPchCid, 0);
  nodes[0].role = Role::PCH;
  nodes[0].cid = kPchCid;
  c.place(kSchCid, 1);
  nodes[1].role = Role::SCH;
  nodes[1].cid = kSchCid;
  for (int i = 0; i < cms; ++i) {
    Cid cid = static_cast<Cid>(3 + i);
    c.place(cid, static_cast<NodeId>(2 + i));
    nodes[2 + i].role = Role::CM;
    nodes[2 + i].cid = cid;
  }
  return c;
}

std::vector<Cid> all_cms(const Cluster& c) { return c.cm_cids(); }

}  // namespace

TEST(ElectTch, ThresholdExamples) {
  EXPECT_TRUE(elect_tch(0.01, 5, 200));
  EXPECT_FALSE(elect_tch(0.5, 5, 200));
  EXPECT_TRUE(elect_tch(0.025, 5, 200));
}

TEST(ElectTch, FrequencyMatchesRatio) {
  RandomStream rng(5);
  const int n = 1'000'000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += elect_tch(rng.uniform(), 5, 200);
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.025, 0.002);
}

TEST(Cluster, AdmitUsesLowestIdleCidFromThree) {
  Cluster c(10, 5);
  c.place(kPchCid, 10);
  EXPECT_EQ(c.admit(11), Cid{3});
  EXPECT_EQ(c.admit(12), Cid{4});
  EXPECT_EQ(c.admit(13), Cid{5});
  EXPECT_EQ(c.admit(14), Cid{2});  // SCH seat is the last resort
  EXPECT_FALSE(c.admit(15).has_value());
  c.release(4);
  EXPECT_EQ(c.admit(15), Cid{4});
  // Idle and occupied CIDs partition 1..capacity.
  std::set<Cid> all(c.idle_cids.begin(), c.idle_cids.end());
  for (const auto& [cid, id] : c.members) EXPECT_TRUE(all.insert(cid).second);
  EXPECT_EQ(all.size(), 5u);
}

TEST(Cfch, EnergyOnlyWeights) {
  NodeState n;
  n.residual_energy = 0.8;
  std::vector<NodeState> peers(1);
  peers[0].position = {3, 4};
  CfchScore s = compute_cfch(n, peers, {1, 0, 0});
  EXPECT_DOUBLE_EQ(s.value, 0.8);
  EXPECT_DOUBLE_EQ(s.distance, 5.0);
}

TEST(Cfch, VelocityTermIsReciprocal) {
  NodeState n;
  n.velocity = {2, 0};
  std::vector<NodeState> peers(2);
  CfchScore s = compute_cfch(n, peers, {0, 1, 0});
  EXPECT_DOUBLE_EQ(s.velocity_delta, 2.0);
  EXPECT_DOUBLE_EQ(s.value, 0.5);
}

TEST(Cfch, DegenerateTermsClampToEpsilon) {
  NodeState n;
  std::vector<NodeState> peers(3);
  CfchScore s = compute_cfch(n, peers, {0, 0.5, 0.5});
  EXPECT_DOUBLE_EQ(s.value, 1.0 / kCfchEpsilon);
}

TEST(SelectHeads, HighestScoresWin) {
  auto nodes = line_of(3, 0.0);
  nodes[0].residual_energy = 0.5;
  nodes[1].residual_energy = 0.9;
  nodes[2].residual_energy = 0.7;
  Cluster c(0, 10);
  c.place(kPchCid, 0);
  c.place(3, 1);
  c.place(4, 2);
  auto [p, s] = select_heads(c, nodes, {1, 0, 0});
  EXPECT_EQ(p, 1u);
  EXPECT_EQ(s, 2u);
  EXPECT_EQ(c.pch(), NodeId{1});
  EXPECT_EQ(c.sch(), NodeId{2});
  EXPECT_EQ(nodes[1].role, Role::PCH);
  EXPECT_EQ(nodes[2].role, Role::SCH);
  EXPECT_EQ(nodes[0].role, Role::CM);
  EXPECT_GT(nodes[0].cid, kSchCid);
  // Every member learnt every other member's CID.
  for (NodeId id : c.member_ids()) EXPECT_EQ(nodes[id].nav.size(), 3u);
}

TEST(SelectHeads, TiesGoToLowestId) {
  auto nodes = line_of(5, 0.0);
  Cluster c(4, 10);
  c.place(kPchCid, 4);
  c.place(3, 2);
  c.place(4, 3);
  c.place(5, 1);
  auto [p, s] = select_heads(c, nodes, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  EXPECT_EQ(p, 1u);
  EXPECT_EQ(s, 2u);
}

TEST(SelectHeads, TwoMembersBothBecomeHeads) {
  auto nodes = line_of(2, 10.0);
  Cluster c(0, 10);
  c.place(kPchCid, 0);
  c.place(3, 1);
  select_heads(c, nodes, {});
  EXPECT_TRUE(c.operational());
  EXPECT_TRUE(c.cm_cids().empty());
}

TEST(SelectHeads, PermutationAndScaleInvariant) {
  RandomStream rng(17);
  std::vector<NodeState> base(12);
  for (int i = 0; i < 12; ++i) {
    base[i].id = static_cast<NodeId>(i);
    base[i].position = {rng.uniform(0, 40), rng.uniform(0, 40)};
    base[i].velocity = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
    base[i].residual_energy = rng.uniform(0.2, 1.0);
  }
  Weights w{0.5, 0.2, 0.3};
  std::pair<NodeId, NodeId> reference;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<NodeId> order(12);
    for (int i = 0; i < 12; ++i) order[i] = static_cast<NodeId>(i);
    rng.shuffle(order);
    auto nodes = base;
    Cluster c(order[0], 20);
    c.place(kPchCid, order[0]);
    for (int i = 1; i < 12; ++i) c.place(static_cast<Cid>(2 + i), order[i]);
    Weights scaled = trial % 2 ? Weights{w.w1 * 3, w.w2 * 3, w.w3 * 3}.normalized() : w;
    auto got = select_heads(c, nodes, scaled);
    if (trial == 0) reference = got;
    EXPECT_EQ(got, reference) << "trial " << trial;
  }
}

TEST(Formation, OneTchInRangeOfThree) {
  auto nodes = line_of(4, 10.0);
  std::vector<NodeId> members{0, 1, 2, 3};
  std::vector<NodeId> tchs{0};
  RandomStream rng(1);
  FormationResult r = form_clusters_with(nodes, members, tchs, small_cfg(), rng);
  ASSERT_EQ(r.clusters.size(), 1u);
  EXPECT_EQ(r.clusters[0].size(), 4u);
  EXPECT_TRUE(r.clusters[0].operational());

  std::vector<Cid> ajc;
  for (const auto& e : r.events) {
    if (e.kind == FormationEvent::Kind::Ajc) ajc.push_back(e.cid);
  }
  EXPECT_EQ(ajc, (std::vector<Cid>{3, 4, 5}));
  for (const auto& n : nodes) EXPECT_EQ(n.nav.size(), 4u);
}

TEST(Formation, NoTchsStillClustersEveryone) {
  auto nodes = line_of(6, 30.0);
  std::vector<NodeId> members{0, 1, 2, 3, 4, 5};
  RandomStream rng(3);
  FormationResult r = form_clusters_with(nodes, members, {}, small_cfg(), rng);
  for (const auto& n : nodes) EXPECT_NE(n.role, Role::Unclustered);
  std::size_t covered = 0;
  for (const auto& c : r.clusters) covered += c.size();
  EXPECT_EQ(covered, 6u);
}

TEST(Formation, EquidistantNodeJoinsLowerId) {
  auto nodes = line_of(3, 0.0);
  nodes[0].position = {0, 0};
  nodes[1].position = {100, 0};
  nodes[2].position = {50, 0};
  std::vector<NodeId> members{0, 1, 2};
  std::vector<NodeId> tchs{1, 0};
  RandomStream rng(1);
  FormationResult r = form_clusters_with(nodes, members, tchs, small_cfg(3), rng);
  for (const auto& c : r.clusters) {
    if (c.cid_of(2)) EXPECT_TRUE(c.cid_of(0).has_value());
  }
}

TEST(Formation, CidMapIsABijectionAndNoNodeIsShared) {
  ScenarioConfig sc;
  ValidatedConfig cfg = validate_config(sc);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RandomStream rng(seed);
    Deployment d = deploy(cfg, rng);
    FormationResult r = form_clusters(d.nodes, cfg, rng);
    std::set<NodeId> seen;
    for (const auto& c : r.clusters) {
      EXPECT_LE(static_cast<int>(c.size()), cfg->cluster_capacity);
      for (const auto& [cid, id] : c.members) {
        EXPECT_GE(cid, 1);
        EXPECT_LE(cid, cfg->cluster_capacity);
        EXPECT_TRUE(seen.insert(id).second) << "node " << id << " in two clusters";
        EXPECT_EQ(d.nodes[id].cid, cid);
      }
    }
    EXPECT_EQ(seen.size(), d.nodes.size());
  }
}

TEST(Maintain, SilentCmFreedOnFourthFrame) {
  auto nodes = line_of(5, 1.0);
  Cluster c = staffed(nodes, 3);
  FrameEvents quiet;
  quiet.checked_in = {3, 4};
  for (int f = 0; f < 3; ++f) {
    auto a = maintain(c, nodes, quiet, {});
    EXPECT_TRUE(a.freed.empty()) << "frame " << f;
  }
  auto a = maintain(c, nodes, quiet, {});
  EXPECT_EQ(a.freed, (std::vector<Cid>{5}));
  EXPECT_TRUE(c.idle_cids.count(5));
  EXPECT_EQ(nodes[4].role, Role::Unclustered);
}

TEST(Maintain, CheckInResetsCounter) {
  auto nodes = line_of(3, 1.0);
  Cluster c = staffed(nodes, 1);
  FrameEvents quiet;
  for (int f = 0; f < 3; ++f) maintain(c, nodes, quiet, {});
  FrameEvents seen;
  seen.checked_in = {3};
  EXPECT_TRUE(maintain(c, nodes, seen, {}).freed.empty());
  for (int f = 0; f < 3; ++f) EXPECT_TRUE(maintain(c, nodes, quiet, {}).freed.empty());
  EXPECT_TRUE(c.cid_of(2).has_value());
}

TEST(Maintain, ManyDeparturesDissolve) {
  auto nodes = line_of(10, 1.0);
  Cluster c = staffed(nodes, 8, 50);
  FrameEvents ev;
  ev.checked_in = {3, 4};
  ev.flagged_absent = {5, 6, 7, 8, 9, 10};
  auto a = maintain(c, nodes, ev, {});
  EXPECT_EQ(a.freed.size(), 6u);
  EXPECT_TRUE(a.dissolve);
}

TEST(Maintain, FiveDeparturesAtThresholdDoNotDissolve) {
  auto nodes = line_of(10, 1.0);
  Cluster c = staffed(nodes, 8, 50);
  FrameEvents ev;
  ev.flagged_absent = {3, 4, 5, 6, 7};
  ev.checked_in = {8, 9, 10};
  EXPECT_FALSE(maintain(c, nodes, ev, {}).dissolve);
}

TEST(Maintain, JoinerAdmittedWhenIdleCidExists) {
  auto nodes = line_of(6, 1.0);
  Cluster c = staffed(nodes, 2, 5);
  FrameEvents ev;
  ev.checked_in = all_cms(c);
  ev.join_requests = {4, 5};
  auto a = maintain(c, nodes, ev, {});
  ASSERT_EQ(a.admitted.size(), 1u);
  EXPECT_EQ(a.admitted[0], (std::pair<NodeId, Cid>{4, 5}));
  EXPECT_EQ(a.rejected, (std::vector<NodeId>{5}));
  EXPECT_EQ(nodes[4].role, Role::CM);
}

TEST(Maintain, NeverFreesPchAndDissolvesOnItsLoss) {
  auto nodes = line_of(4, 1.0);
  Cluster c = staffed(nodes, 2);
  nodes[0].present = false;
  FrameEvents ev;
  ev.checked_in = all_cms(c);
  auto a = maintain(c, nodes, ev, {});
  EXPECT_TRUE(a.dissolve);
  EXPECT_TRUE(std::find(a.freed.begin(), a.freed.end(), kPchCid) == a.freed.end());
  EXPECT_EQ(c.pch(), NodeId{0});
}

TEST(Maintain, WeakSchIsReplacedByBestCm) {
  auto nodes = line_of(5, 1.0);
  Cluster c = staffed(nodes, 3);
  nodes[1].residual_energy = 0.05;
  nodes[2].residual_energy = 0.4;
  nodes[3].residual_energy = 0.95;
  nodes[4].residual_energy = 0.6;
  FrameEvents ev;
  ev.checked_in = all_cms(c);
  auto a = maintain(c, nodes, ev, {1, 0, 0});
  ASSERT_TRUE(a.new_sch.has_value());
  EXPECT_EQ(*a.new_sch, 3u);
  EXPECT_EQ(c.sch(), NodeId{3});
  EXPECT_EQ(nodes[1].role, Role::CM);
  EXPECT_EQ(nodes[3].cid, kSchCid);
}
