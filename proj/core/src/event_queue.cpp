#include "dchmac/event_queue.hpp"

#include <string>

#include "dchmac/errors.hpp"

namespace dchmac {

void EventQueue::push(Tick tick, EventKind kind, NodeId node, std::uint64_t payload) {
  if (tick < now_) {
    throw SimError("event scheduled at tick " + std::to_string(tick) +
                   " before current tick " + std::to_string(now_));
  }
  heap_.push({tick, kind, node, payload, next_seq_++});
}

std::optional<Event> EventQueue::pop() {
  if (heap_.empty()) return std::nullopt;
  Event e = heap_.top();
  heap_.pop();
  now_ = e.tick;
  return e;
}

std::optional<Tick> EventQueue::peek_tick() const {
  if (heap_.empty()) return std::nullopt;
  return heap_.top().tick;
}

}  // namespace dchmac
