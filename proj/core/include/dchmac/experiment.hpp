#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dchmac/analysis.hpp"
#include "dchmac/config.hpp"
#include "dchmac/simulator.hpp"

namespace dchmac {

/// One swept axis over a base scenario. `couple` runs after the swept field
/// is set and may derive other fields from it (cluster count from size, ...).
struct Sweep {
  ScenarioConfig base;
  std::string parameter;
  std::vector<double> values;
  std::vector<Protocol> protocols{Protocol::DCHMAC, Protocol::FMMAC};
  int repetitions = 5;
  std::uint64_t base_seed = 1;
  int horizon = 2000;
  std::string figure;  // empty for ad-hoc sweeps
  std::function<void(ScenarioConfig&, double)> couple;
  bool keep_trace = false;
};

void check_sweep(const Sweep& s);

/// Scenario for one point of the sweep; throws ConfigError if invalid.
ScenarioConfig point_config(const Sweep& s, double value);

struct RunRecord {
  double parameter = 0.0;
  Protocol protocol = Protocol::DCHMAC;
  int rep = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  MetricsReport metrics;

  nlohmann::json to_json() const;  // no per-frame trace
};

RunRecord run_record_from_json(const nlohmann::json& j);

struct PointSummary {
  double parameter = 0.0;
  Protocol protocol = Protocol::DCHMAC;
  int runs = 0;
  int failed = 0;
  double mean_total = 0.0;
  double sd_total = 0.0;
  double mean_intra = 0.0;
  double mean_inter = 0.0;
  double mean_energy_consumed = 0.0;
  double mean_dissipated = 0.0;
  double sd_dissipated = 0.0;
  std::optional<double> analytic_total;  // closed-form S at this point
};

struct SweepResult {
  std::string parameter;
  std::string figure;
  std::vector<RunRecord> runs;       // ordered by (value, protocol, rep)
  std::vector<PointSummary> points;  // ordered by (value, protocol)

  const PointSummary* find(double value, Protocol p) const;
  /// Means of one protocol in value order.
  std::vector<double> series(Protocol p, double PointSummary::*field) const;
};

/// Runs every (value, protocol, repetition) cell, `threads` at a time.
/// Seeds are base_seed + value_index * repetitions + rep, so protocols at a
/// point see the same deployment. Failed cells are kept and marked.
SweepResult run_sweep(const Sweep& s, int threads = 1);

/// Names accepted by figure_sweep.
const std::vector<std::string>& figure_names();

/// Preset sweeps that reproduce each figure's axes over `base`.
Sweep figure_sweep(std::string_view name, const ScenarioConfig& base = {});

enum class OutputFormat : std::uint8_t { Csv, Jsonl, Plotdata };

OutputFormat output_format_from_string(std::string_view s);

inline constexpr const char* kCsvHeader =
    "parameter,protocol,rep,throughput_total,throughput_intra,throughput_inter,"
    "energy_consumed,energy_dissipated,delivered,lost,collided";

std::string to_csv(const SweepResult& r);
std::string to_jsonl(const SweepResult& r);
/// Two-column blocks, one per protocol, separated by blank lines.
std::string to_plotdata(const SweepResult& r);

/// Writes <stem>.csv, <stem>.jsonl and/or <stem>.dat under dir. Returns
/// written paths. Throws IoError naming the failing path.
std::vector<std::string> emit_outputs(const SweepResult& r, const std::string& dir,
                                      const std::vector<OutputFormat>& formats,
                                      const std::string& stem = "");

/// Fixed-precision double formatting used by every text output.
std::string format_number(double v);

}  // namespace dchmac
