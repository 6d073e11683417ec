#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "dchmac/types.hpp"

namespace dchmac {

enum class PacketKind : std::uint8_t {
  Hello = 1,
  Rjc = 2,
  Ajc = 3,
  Reservation = 4,
  Reply = 5,
  Data = 6,
};

struct HelloBody {
  NodeId cluster_id = 0;  // equals the (T)CH id
  NodeId id = 0;
  Vec2 location;
  Vec2 speed;
  double remaining_energy = 0.0;
  std::uint16_t cm_threshold = 0;
  friend bool operator==(const HelloBody&, const HelloBody&) = default;
};

enum class Application : std::uint8_t { Join = 0, Quit = 1 };

struct RjcBody {
  NodeId id = 0;
  Vec2 location;
  Vec2 speed;
  double remaining_energy = 0.0;
  Application application = Application::Join;
  friend bool operator==(const RjcBody&, const RjcBody&) = default;
};

struct CidGrant {
  NodeId id = 0;
  Cid cid = kNoCid;
  friend bool operator==(const CidGrant&, const CidGrant&) = default;
};

struct AjcBody {
  NodeId cluster_id = 0;
  std::vector<CidGrant> accepted;
  Vec2 tch_location;
  Vec2 tch_speed;
  double tch_energy = 0.0;
  std::uint16_t idle_cids = 0;
  friend bool operator==(const AjcBody&, const AjcBody&) = default;
};

struct ReservationBody {
  std::uint16_t intra_slots = 0;
  std::uint16_t inter_slots = 0;
  NodeId re_id = 0;

  int total() const { return intra_slots + inter_slots; }
  friend bool operator==(const ReservationBody&, const ReservationBody&) = default;
};

struct SlotGrant {
  std::uint16_t slot = 0;
  NodeId sender = 0;
  NodeId receiver = 0;
  ChannelId channel;
  friend bool operator==(const SlotGrant&, const SlotGrant&) = default;
};

struct ReplyBody {
  std::vector<SlotGrant> grants;
  friend bool operator==(const ReplyBody&, const ReplyBody&) = default;
};

struct DataBody {
  std::uint32_t sequence = 0;
  NodeId origin = 0;
  NodeId final_dst = 0;
  friend bool operator==(const DataBody&, const DataBody&) = default;
};

using PacketBody =
    std::variant<HelloBody, RjcBody, AjcBody, ReservationBody, ReplyBody, DataBody>;

struct Packet {
  NodeId src = 0;
  NodeId dst = kBroadcast;
  std::uint16_t payload_slots = 1;
  PacketBody body;

  PacketKind kind() const;
  friend bool operator==(const Packet&, const Packet&) = default;
};

/// Trace wire format: kind tag byte, src u32, dst u32, payload u16, then the
/// body fields in declaration order. Integers are little-endian, reals are
/// IEEE-754 binary64, lists carry a u16 length prefix.
std::vector<std::uint8_t> encode(const Packet& p);
Packet decode(std::span<const std::uint8_t> bytes);

}  // namespace dchmac
