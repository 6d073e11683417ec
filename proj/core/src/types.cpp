#include "dchmac/types.hpp"

#include <algorithm>
#include <string>

namespace dchmac {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Unclustered: return "Unclustered";
    case Role::TCH: return "TCH";
    case Role::PCH: return "PCH";
    case Role::SCH: return "SCH";
    case Role::CM: return "CM";
  }
  return "?";
}

std::string to_string(ChannelId c) {
  switch (c.band) {
    case Band::F1: return "f1";
    case Band::F3: return "f3";
    case Band::F2M: return "f2M(" + std::to_string(c.index) + ")";
    case Band::F2V: return "f2V(" + std::to_string(c.index) + ")";
  }
  return "?";
}

void NodeState::learn(const NavEntry& e) {
  auto it = std::find_if(nav.begin(), nav.end(),
                         [&](const NavEntry& n) { return n.id == e.id; });
  if (it == nav.end()) {
    nav.push_back(e);
  } else {
    *it = e;
  }
}

}  // namespace dchmac
