#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

#include "dchmac/types.hpp"

namespace dchmac {

// Lower value fires first when ticks tie.
enum class EventKind : std::uint8_t {
  FrameBoundary = 0,
  NodeDeparture = 1,
  NodeArrival = 2,
  PacketArrival = 3,
  SlotBoundary = 4,
};

struct Event {
  Tick tick = 0;
  EventKind kind = EventKind::SlotBoundary;
  NodeId node = 0;
  std::uint64_t payload = 0;
  std::uint64_t seq = 0;
};

class EventQueue {
 public:
  void push(Tick tick, EventKind kind, NodeId node = 0, std::uint64_t payload = 0);
  std::optional<Event> pop();
  std::optional<Tick> peek_tick() const;
  Tick now() const { return now_; }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.tick != b.tick) return a.tick > b.tick;
      if (a.kind != b.kind) return a.kind > b.kind;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_seq_ = 0;
  Tick now_ = 0;
};

}  // namespace dchmac
