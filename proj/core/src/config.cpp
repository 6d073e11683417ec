#include "dchmac/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "dchmac/errors.hpp"

namespace dchmac {

std::string_view to_string(MobilityMode m) {
  switch (m) {
    case MobilityMode::Replace: return "replace";
    case MobilityMode::DepartOnly: return "depart_only";
    case MobilityMode::Population: return "population";
  }
  return "replace";
}

MobilityMode mobility_mode_from_string(std::string_view s) {
  if (s == "replace") return MobilityMode::Replace;
  if (s == "depart_only") return MobilityMode::DepartOnly;
  if (s == "population") return MobilityMode::Population;
  throw ConfigError("unknown mobility_mode '" + std::string(s) + "'");
}

namespace {

struct Field {
  std::string name;
  std::function<nlohmann::json(const ScenarioConfig&)> get;
  std::function<void(ScenarioConfig&, const nlohmann::json&)> set;
};

template <class T>
T as_number(const nlohmann::json& v, std::string_view name) {
  if (!v.is_number()) {
    throw ConfigError("field '" + std::string(name) + "' must be a number");
  }
  if constexpr (std::is_integral_v<T>) {
    double d = v.get<double>();
    if (std::floor(d) != d) {
      throw ConfigError("field '" + std::string(name) + "' must be an integer");
    }
    if constexpr (std::is_unsigned_v<T>) {
      if (d < 0) {
        throw ConfigError("field '" + std::string(name) + "' must be non-negative");
      }
      return v.is_number_unsigned() ? v.get<T>() : static_cast<T>(d);
    } else {
      return static_cast<T>(d);
    }
  } else {
    return v.get<T>();
  }
}

template <class T>
Field member(std::string name, T ScenarioConfig::*ptr) {
  return Field{
      name,
      [ptr](const ScenarioConfig& c) { return nlohmann::json(c.*ptr); },
      [ptr, name](ScenarioConfig& c, const nlohmann::json& v) {
        c.*ptr = as_number<T>(v, name);
      }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(member("total_nodes", &ScenarioConfig::total_nodes));
    f.push_back(member("target_clusters", &ScenarioConfig::target_clusters));
    f.push_back(member("cluster_capacity", &ScenarioConfig::cluster_capacity));
    f.push_back(member("broadcast_range", &ScenarioConfig::broadcast_range));
    f.push_back(member("relative_speed", &ScenarioConfig::relative_speed));
    f.push_back(member("free_flow_speed", &ScenarioConfig::free_flow_speed));
    f.push_back(member("inter_arrival_rate", &ScenarioConfig::inter_arrival_rate));
    f.push_back(member("w1", &ScenarioConfig::w1));
    f.push_back(member("w2", &ScenarioConfig::w2));
    f.push_back(member("w3", &ScenarioConfig::w3));
    f.push_back(member("min_window", &ScenarioConfig::min_window));
    f.push_back(member("max_backoff_stage", &ScenarioConfig::max_backoff_stage));
    f.push_back(member("slot_time", &ScenarioConfig::slot_time));
    f.push_back(member("fixed_period_len", &ScenarioConfig::fixed_period_len));
    f.push_back(member("frame_data_capacity", &ScenarioConfig::frame_data_capacity));
    f.push_back(member("mobility_rate", &ScenarioConfig::mobility_rate));
    f.push_back(member("packet_loss_prob", &ScenarioConfig::packet_loss_prob));
    f.push_back(member("energy_per_packet", &ScenarioConfig::energy_per_packet));
    f.push_back(member("grid_side", &ScenarioConfig::grid_side));
    f.push_back(member("rng_seed", &ScenarioConfig::rng_seed));
    f.push_back(member("intra_arrival_rate", &ScenarioConfig::intra_arrival_rate));
    f.push_back(member("payload_slots", &ScenarioConfig::payload_slots));
    f.push_back(member("tx_success_time", &ScenarioConfig::tx_success_time));
    f.push_back(member("tx_collision_time", &ScenarioConfig::tx_collision_time));
    f.push_back(member("markov_period", &ScenarioConfig::markov_period));
    f.push_back(member("retry_limit", &ScenarioConfig::retry_limit));
    f.push_back(member("queue_limit", &ScenarioConfig::queue_limit));
    f.push_back(member("control_energy_factor", &ScenarioConfig::control_energy_factor));
    f.push_back(Field{
        "mobility_mode",
        [](const ScenarioConfig& c) { return nlohmann::json(std::string(to_string(c.mobility_mode))); },
        [](ScenarioConfig& c, const nlohmann::json& v) {
          if (!v.is_string()) throw ConfigError("field 'mobility_mode' must be a string");
          c.mobility_mode = mobility_mode_from_string(v.get<std::string>());
        }});
    return f;
  }();
  return table;
}

const Field* find_field(std::string_view name) {
  for (const auto& f : fields()) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

}  // namespace

int ValidatedConfig::frame_length() const {
  return cfg_.cluster_capacity + kReplySlots + cfg_.fixed_period_len +
         cfg_.frame_data_capacity;
}

ValidatedConfig validate_config(const ScenarioConfig& in) {
  ScenarioConfig c = in;
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };

  if (c.total_nodes <= 0) fail("N must be positive");
  if (c.target_clusters <= 0) fail("M must be positive");
  if (c.target_clusters > c.total_nodes) fail("M must not exceed N");
  if (c.cluster_capacity < 2) fail("X_M must be at least 2");
  if (c.w1 < 0 || c.w2 < 0 || c.w3 < 0) fail("weights must be non-negative");
  double wsum = c.w1 + c.w2 + c.w3;
  if (std::abs(wsum - 1.0) > 1e-9) fail("weights must sum to 1");
  c.w1 /= wsum;
  c.w2 /= wsum;
  c.w3 /= wsum;
  if (c.relative_speed < 0) fail("v_r must be non-negative");
  if (c.relative_speed > c.free_flow_speed) fail("v_r must not exceed v_f");
  if (c.min_window < 1) fail("W must be at least 1");
  if (c.max_backoff_stage < 0) fail("m must be non-negative");
  if (c.max_backoff_stage > 20) fail("m must be at most 20");
  if (c.packet_loss_prob < 0 || c.packet_loss_prob > 1) fail("P_lost must lie in [0, 1]");
  if (!(c.broadcast_range > 0)) fail("R_trans must be positive");
  if (!(c.slot_time > 0)) fail("slot_time must be positive");
  if (c.inter_arrival_rate < 0) fail("inter_arrival_rate must be non-negative");
  if (c.intra_arrival_rate < 0) fail("intra_arrival_rate must be non-negative");
  if (c.fixed_period_len < 0) fail("fixed_period_len must be non-negative");
  if (c.frame_data_capacity < 0) fail("frame_data_capacity must be non-negative");
  if (c.frame_data_capacity == 0) c.frame_data_capacity = 2 * c.cluster_capacity;
  if (c.mobility_rate < 0) fail("mobility_rate must be non-negative");
  if (c.energy_per_packet < 0) fail("energy_per_packet must be non-negative");
  if (c.grid_side < 0) fail("grid_side must be non-negative");
  if (c.grid_side == 0) {
    c.grid_side = std::max(1, static_cast<int>(std::lround(std::sqrt(c.target_clusters))));
  }
  if (c.payload_slots < 1) fail("payload_slots must be at least 1");
  if (c.tx_success_time < 1) fail("tx_success_time must be at least 1");
  if (c.tx_collision_time < 1) fail("tx_collision_time must be at least 1");
  if (!(c.markov_period > 0)) fail("markov_period must be positive");
  if (c.retry_limit < 1) fail("retry_limit must be at least 1");
  if (c.queue_limit < 1) fail("queue_limit must be at least 1");
  if (c.control_energy_factor < 0) fail("control_energy_factor must be non-negative");
  return ValidatedConfig(std::move(c));
}

const std::vector<std::string>& config_field_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& f : fields()) n.push_back(f.name);
    return n;
  }();
  return names;
}

bool is_config_field(std::string_view name) { return find_field(name) != nullptr; }

void set_config_field(ScenarioConfig& cfg, std::string_view name,
                      const nlohmann::json& value) {
  const Field* f = find_field(name);
  if (f == nullptr) throw ConfigError("unknown field '" + std::string(name) + "'");
  f->set(cfg, value);
}

nlohmann::json get_config_field(const ScenarioConfig& cfg, std::string_view name) {
  const Field* f = find_field(name);
  if (f == nullptr) throw ConfigError("unknown field '" + std::string(name) + "'");
  return f->get(cfg);
}

nlohmann::json to_json(const ScenarioConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : fields()) j[f.name] = f.get(cfg);
  return j;
}

ScenarioConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  ScenarioConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (value.is_object() || value.is_array()) {
      throw ConfigError("field '" + key + "' must be a scalar");
    }
    set_config_field(cfg, key, value);
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario", path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed scenario file: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace dchmac
