#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace dchmac {

enum class MobilityMode : std::uint8_t {
  Replace,     // arrivals replace departures, E[N] stays near stationary
  DepartOnly,  // departures only
  Population,  // arrivals at lambda1 per second, sojourn markov_period
};

std::string_view to_string(MobilityMode m);
MobilityMode mobility_mode_from_string(std::string_view s);

/// Scenario parameters. Times are in seconds unless the name says slots;
/// energy is a fraction of the initial battery.
struct ScenarioConfig {
  int total_nodes = 200;
  int target_clusters = 5;
  int cluster_capacity = 50;
  double broadcast_range = 100.0;
  double relative_speed = 5.0;
  double free_flow_speed = 20.0;
  double inter_arrival_rate = 200.0;  // packets per CM per second
  double w1 = 1.0 / 3.0;
  double w2 = 1.0 / 3.0;
  double w3 = 1.0 / 3.0;
  int min_window = 16;
  int max_backoff_stage = 3;
  double slot_time = 1e-3;
  int fixed_period_len = 4;
  int frame_data_capacity = 0;  // 0 selects 2 * cluster_capacity
  double mobility_rate = 0.0;   // departures per frame from a cluster of size N/M
  double packet_loss_prob = 0.01;
  double energy_per_packet = 1e-5;
  int grid_side = 0;  // 0 selects round(sqrt(target_clusters))
  std::uint64_t rng_seed = 1;

  // Parameters the base set leaves open.
  double intra_arrival_rate = 50.0;  // packets per CM per second
  int payload_slots = 1;
  int tx_success_time = 1;
  int tx_collision_time = 1;
  double markov_period = 20.0;
  int retry_limit = 7;
  int queue_limit = 200;
  double control_energy_factor = 0.1;
  MobilityMode mobility_mode = MobilityMode::Replace;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// A ScenarioConfig whose invariants have been checked. Only
/// validate_config can produce one.
class ValidatedConfig {
 public:
  const ScenarioConfig& get() const { return cfg_; }
  const ScenarioConfig* operator->() const { return &cfg_; }
  operator const ScenarioConfig&() const { return cfg_; }

  int frame_length() const;
  int reservation_slots() const { return cfg_.cluster_capacity; }
  int data_period_len() const {
    return cfg_.fixed_period_len + cfg_.frame_data_capacity;
  }
  double frame_duration() const { return frame_length() * cfg_.slot_time; }

 private:
  friend ValidatedConfig validate_config(const ScenarioConfig&);
  explicit ValidatedConfig(ScenarioConfig c) : cfg_(std::move(c)) {}
  ScenarioConfig cfg_;
};

inline constexpr int kReplySlots = 3;

ValidatedConfig validate_config(const ScenarioConfig& cfg);

/// Names of every scalar field, in serialization order.
const std::vector<std::string>& config_field_names();
bool is_config_field(std::string_view name);

/// Assigns a scalar to a named field; throws ConfigError for unknown names
/// or values of the wrong shape.
void set_config_field(ScenarioConfig& cfg, std::string_view name,
                      const nlohmann::json& value);
nlohmann::json get_config_field(const ScenarioConfig& cfg,
                                std::string_view name);

nlohmann::json to_json(const ScenarioConfig& cfg);
ScenarioConfig config_from_json(const nlohmann::json& j);
ScenarioConfig load_config(const std::string& path);

}  // namespace dchmac
