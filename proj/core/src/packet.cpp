#include "dchmac/packet.hpp"

#include <bit>
#include <cstring>
#include <limits>
#include <type_traits>

#include "dchmac/errors.hpp"

namespace dchmac {

PacketKind Packet::kind() const {
  return static_cast<PacketKind>(body.index() + 1);
}

namespace {

class Writer {
 public:
  template <class T>
  void uint(T v) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  void real(double d) { uint(std::bit_cast<std::uint64_t>(d)); }
  void vec(Vec2 v) {
    real(v.x);
    real(v.y);
  }
  void count(std::size_t n) {
    if (n > std::numeric_limits<std::uint16_t>::max()) {
      throw DecodeError("list too long for wire encoding");
    }
    uint(static_cast<std::uint16_t>(n));
  }
  void channel(ChannelId c) {
    uint(static_cast<std::uint8_t>(c.band));
    uint(static_cast<std::uint16_t>(c.index));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <class T>
  T uint() {
    if (pos_ + sizeof(T) > in_.size()) throw DecodeError("truncated packet");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<T>(in_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(T);
    return v;
  }
  double real() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  Vec2 vec() {
    Vec2 v;
    v.x = real();
    v.y = real();
    return v;
  }
  ChannelId channel() {
    auto band = uint<std::uint8_t>();
    if (band > static_cast<std::uint8_t>(Band::F3)) throw DecodeError("bad channel band");
    ChannelId c;
    c.band = static_cast<Band>(band);
    c.index = uint<std::uint16_t>();
    return c;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode(const Packet& p) {
  Writer w;
  w.uint(static_cast<std::uint8_t>(p.kind()));
  w.uint(p.src);
  w.uint(p.dst);
  w.uint(p.payload_slots);
  std::visit(
      [&w](const auto& b) {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, HelloBody>) {
          w.uint(b.cluster_id);
          w.uint(b.id);
          w.vec(b.location);
          w.vec(b.speed);
          w.real(b.remaining_energy);
          w.uint(b.cm_threshold);
        } else if constexpr (std::is_same_v<B, RjcBody>) {
          w.uint(b.id);
          w.vec(b.location);
          w.vec(b.speed);
          w.real(b.remaining_energy);
          w.uint(static_cast<std::uint8_t>(b.application));
        } else if constexpr (std::is_same_v<B, AjcBody>) {
          w.uint(b.cluster_id);
          w.count(b.accepted.size());
          for (const auto& g : b.accepted) {
            w.uint(g.id);
            w.uint(g.cid);
          }
          w.vec(b.tch_location);
          w.vec(b.tch_speed);
          w.real(b.tch_energy);
          w.uint(b.idle_cids);
        } else if constexpr (std::is_same_v<B, ReservationBody>) {
          w.uint(b.intra_slots);
          w.uint(b.inter_slots);
          w.uint(b.re_id);
        } else if constexpr (std::is_same_v<B, ReplyBody>) {
          w.count(b.grants.size());
          for (const auto& g : b.grants) {
            w.uint(g.slot);
            w.uint(g.sender);
            w.uint(g.receiver);
            w.channel(g.channel);
          }
        } else {
          w.uint(b.sequence);
          w.uint(b.origin);
          w.uint(b.final_dst);
        }
      },
      p.body);
  return w.take();
}

Packet decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  Packet p;
  auto tag = r.uint<std::uint8_t>();
  p.src = r.uint<std::uint32_t>();
  p.dst = r.uint<std::uint32_t>();
  p.payload_slots = r.uint<std::uint16_t>();
  switch (static_cast<PacketKind>(tag)) {
    case PacketKind::Hello: {
      HelloBody b;
      b.cluster_id = r.uint<std::uint32_t>();
      b.id = r.uint<std::uint32_t>();
      b.location = r.vec();
      b.speed = r.vec();
      b.remaining_energy = r.real();
      b.cm_threshold = r.uint<std::uint16_t>();
      p.body = b;
      break;
    }
    case PacketKind::Rjc: {
      RjcBody b;
      b.id = r.uint<std::uint32_t>();
      b.location = r.vec();
      b.speed = r.vec();
      b.remaining_energy = r.real();
      auto app = r.uint<std::uint8_t>();
      if (app > 1) throw DecodeError("bad RJC application bit");
      b.application = static_cast<Application>(app);
      p.body = b;
      break;
    }
    case PacketKind::Ajc: {
      AjcBody b;
      b.cluster_id = r.uint<std::uint32_t>();
      auto n = r.uint<std::uint16_t>();
      b.accepted.reserve(n);
      for (std::uint16_t i = 0; i < n; ++i) {
        CidGrant g;
        g.id = r.uint<std::uint32_t>();
        g.cid = r.uint<std::uint16_t>();
        b.accepted.push_back(g);
      }
      b.tch_location = r.vec();
      b.tch_speed = r.vec();
      b.tch_energy = r.real();
      b.idle_cids = r.uint<std::uint16_t>();
      p.body = std::move(b);
      break;
    }
    case PacketKind::Reservation: {
      ReservationBody b;
      b.intra_slots = r.uint<std::uint16_t>();
      b.inter_slots = r.uint<std::uint16_t>();
      b.re_id = r.uint<std::uint32_t>();
      p.body = b;
      break;
    }
    case PacketKind::Reply: {
      ReplyBody b;
      auto n = r.uint<std::uint16_t>();
      b.grants.reserve(n);
      for (std::uint16_t i = 0; i < n; ++i) {
        SlotGrant g;
        g.slot = r.uint<std::uint16_t>();
        g.sender = r.uint<std::uint32_t>();
        g.receiver = r.uint<std::uint32_t>();
        g.channel = r.channel();
        b.grants.push_back(g);
      }
      p.body = std::move(b);
      break;
    }
    case PacketKind::Data: {
      DataBody b;
      b.sequence = r.uint<std::uint32_t>();
      b.origin = r.uint<std::uint32_t>();
      b.final_dst = r.uint<std::uint32_t>();
      p.body = b;
      break;
    }
    default:
      throw DecodeError("unknown packet kind tag");
  }
  if (!r.done()) throw DecodeError("trailing bytes after packet");
  return p;
}

}  // namespace dchmac
