#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dchmac {

using NodeId = std::uint32_t;
using Cid = std::uint16_t;
using Tick = std::int64_t;

inline constexpr NodeId kBroadcast = 0xFFFFFFFFu;
inline constexpr Cid kPchCid = 1;
inline constexpr Cid kSchCid = 2;
inline constexpr Cid kNoCid = 0;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend bool operator==(Vec2, Vec2) = default;

  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

enum class Role : std::uint8_t { Unclustered, TCH, PCH, SCH, CM };

std::string_view to_string(Role r);

enum class Band : std::uint8_t { F1, F2M, F2V, F3 };

/// One channel of the plan. F1 and F3 are network-wide; the f2 pair is
/// per cluster and indexed by the cluster channel index.
struct ChannelId {
  Band band = Band::F1;
  int index = 0;

  static constexpr ChannelId f1() { return {Band::F1, 0}; }
  static constexpr ChannelId f3() { return {Band::F3, 0}; }
  static constexpr ChannelId f2m(int k) { return {Band::F2M, k}; }
  static constexpr ChannelId f2v(int k) { return {Band::F2V, k}; }

  friend bool operator==(ChannelId, ChannelId) = default;
  friend auto operator<=>(ChannelId, ChannelId) = default;
};

std::string to_string(ChannelId c);

struct NavEntry {
  NodeId id = 0;
  Cid cid = kNoCid;
  Vec2 position;
  Vec2 velocity;

  friend bool operator==(const NavEntry&, const NavEntry&) = default;
};

struct NodeState {
  NodeId id = 0;
  Cid cid = kNoCid;
  Vec2 position;
  Vec2 velocity;
  double residual_energy = 1.0;
  Role role = Role::Unclustered;
  ChannelId transceiver_a = ChannelId::f1();
  ChannelId transceiver_b = ChannelId::f3();
  std::vector<NavEntry> nav;
  bool present = true;

  bool alive() const { return present && residual_energy > 0.0; }

  // Updates or inserts the NAV record for `e.id`.
  void learn(const NavEntry& e);
};

}  // namespace dchmac
