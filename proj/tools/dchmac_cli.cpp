// dchmac: run, sweep, analyze and validate scenarios from the command line.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dchmac/analysis.hpp"
#include "dchmac/config.hpp"
#include "dchmac/errors.hpp"
#include "dchmac/experiment.hpp"
#include "dchmac/grid.hpp"
#include "dchmac/simulator.hpp"

namespace {

using namespace dchmac;

// Options shared by every verb: scenario file, per-field overrides, seed.
struct Common {
  std::string scenario;
  std::map<std::string, std::string> fields;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app) {
    app->add_option("scenario", scenario, "Scenario file (JSON object of fields)");
    for (const auto& name : config_field_names()) {
      app->add_option("--" + name, fields[name], "Override " + name);
    }
    app->add_option("--seed", seed, "RNG seed (same as --rng_seed)");
  }

  ScenarioConfig config() const {
    ScenarioConfig c = scenario.empty() ? ScenarioConfig{} : load_config(scenario);
    for (const auto& [name, text] : fields) {
      if (text.empty()) continue;
      nlohmann::json v = nlohmann::json::parse(text, nullptr, false);
      if (v.is_discarded()) v = text;  // bare words such as mobility modes
      set_config_field(c, name, v);
    }
    if (seed) c.rng_seed = *seed;
    return c;
  }
};

std::vector<OutputFormat> parse_formats(const std::vector<std::string>& names) {
  std::vector<OutputFormat> out;
  for (const auto& n : names) out.push_back(output_format_from_string(n));
  return out;
}

void write_json(const std::string& dir, const std::string& name, const nlohmann::json& j) {
  std::filesystem::create_directories(dir);
  auto path = std::filesystem::path(dir) / name;
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing", path.string());
  f << j.dump(2) << '\n';
  if (!f) throw IoError("write failed", path.string());
}

struct RunArgs {
  std::string protocol = "DCHMAC";
  int horizon = 2000;
  std::string out_dir;
  std::vector<std::string> formats{"csv", "jsonl"};
  bool trace = false;
};

int do_run(const Common& common, const RunArgs& a) {
  ScenarioConfig c = common.config();
  ValidatedConfig v = validate_config(c);
  Protocol p = protocol_from_string(a.protocol);

  RunRecord rec;
  rec.parameter = static_cast<double>(c.rng_seed);
  rec.protocol = p;
  rec.seed = c.rng_seed;
  rec.metrics = run(v, p, a.horizon, RunOptions{.keep_trace = a.trace});

  nlohmann::json j = rec.metrics.to_json();
  if (!a.trace) j.erase("trace");
  std::cout << j.dump(2) << '\n';

  if (!a.out_dir.empty()) {
    SweepResult r;
    r.parameter = "rng_seed";
    r.runs.push_back(rec);
    emit_outputs(r, a.out_dir, parse_formats(a.formats), "run");
    write_json(a.out_dir, "run.json", j);
  }
  return 0;
}

struct SweepArgs {
  std::string figure;
  std::string param;
  std::vector<double> values;
  std::vector<std::string> protocols;
  int reps = 5;
  std::optional<int> horizon;
  int threads = 0;
  std::string out_dir = ".";
  std::vector<std::string> formats{"csv", "jsonl", "plotdata"};
};

int do_sweep(const Common& common, const SweepArgs& a) {
  ScenarioConfig base = common.config();
  Sweep s;
  if (!a.figure.empty()) {
    s = figure_sweep(a.figure, base);
  } else {
    if (a.param.empty() || a.values.empty()) {
      throw ConfigError("sweep needs --figure or both --param and --values");
    }
    s.base = base;
    s.parameter = a.param;
    s.values = a.values;
    s.horizon = 2000;
  }
  if (!a.figure.empty() && !a.param.empty()) {
    throw ConfigError("--figure and --param are exclusive");
  }
  if (!a.protocols.empty()) {
    s.protocols.clear();
    for (const auto& p : a.protocols) s.protocols.push_back(protocol_from_string(p));
  }
  if (!a.values.empty()) s.values = a.values;
  if (a.horizon) s.horizon = *a.horizon;
  s.repetitions = a.reps;
  s.base_seed = base.rng_seed;
  check_sweep(s);

  int threads = a.threads > 0 ? a.threads
                              : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  SweepResult r = run_sweep(s, threads);

  std::printf("%-12s %-10s %5s %10s %10s %10s %12s\n", s.parameter.c_str(), "protocol", "runs",
              "S_mean", "S_sd", "S_model", "E_diss");
  int failed = 0;
  for (const auto& pt : r.points) {
    failed += pt.failed;
    std::printf("%-12s %-10s %5d %10.4f %10.4f %10s %12.4g\n",
                format_number(pt.parameter).c_str(), std::string(to_string(pt.protocol)).c_str(),
                pt.runs, pt.mean_total, pt.sd_total,
                pt.analytic_total ? format_number(*pt.analytic_total).c_str() : "-",
                pt.mean_dissipated);
  }
  for (const auto& path : emit_outputs(r, a.out_dir, parse_formats(a.formats))) {
    std::printf("wrote %s\n", path.c_str());
  }
  if (failed > 0) {
    std::fprintf(stderr, "%d run(s) failed; see the jsonl output for errors\n", failed);
    return 2;
  }
  return 0;
}

int do_analyze(const Common& common, const std::string& out_dir) {
  ValidatedConfig v = validate_config(common.config());
  nlohmann::json j;
  j["throughput"] = to_json(analyze(v));
  int side = v->grid_side > 0
                 ? v->grid_side
                 : static_cast<int>(std::lround(std::sqrt(static_cast<double>(v->target_clusters))));
  if (side >= 2) j["grid"] = to_json(grid_schedule(side));
  std::cout << j.dump(2) << '\n';
  if (!out_dir.empty()) write_json(out_dir, "analysis.json", j);
  return 0;
}

int do_validate(const Common& common) {
  ValidatedConfig v = validate_config(common.config());
  std::printf("valid: frame %d slots (%g s), data period %d slots\n", v.frame_length(),
              v.frame_duration(), v.data_period_len());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DCHMAC dual-cluster-head MAC simulator and analytical model"};
  app.require_subcommand(1);

  Common run_c, sweep_c, analyze_c, validate_c;
  RunArgs run_a;
  SweepArgs sweep_a;
  std::string analyze_out;

  auto* run_cmd = app.add_subcommand("run", "Simulate one scenario");
  run_c.attach(run_cmd);
  run_cmd->add_option("--protocol", run_a.protocol, "DCHMAC, FMMAC or FLAT80211");
  run_cmd->add_option("--horizon", run_a.horizon, "Frames to simulate")->capture_default_str();
  run_cmd->add_option("--out-dir", run_a.out_dir, "Directory for output files");
  run_cmd->add_option("--format", run_a.formats, "csv, jsonl")->delimiter(',');
  run_cmd->add_flag("--trace", run_a.trace, "Include the per-frame trace");

  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter or reproduce a figure");
  sweep_c.attach(sweep_cmd);
  sweep_cmd->add_option("--figure", sweep_a.figure, "fig6 .. fig12")
      ->check(CLI::IsMember(figure_names()));
  sweep_cmd->add_option("--param", sweep_a.param, "Scenario field to sweep");
  sweep_cmd->add_option("--values", sweep_a.values, "Comma-separated values")->delimiter(',');
  sweep_cmd->add_option("--protocols,--protocol", sweep_a.protocols, "Protocols to compare")
      ->delimiter(',');
  sweep_cmd->add_option("--reps", sweep_a.reps, "Repetitions per point")->capture_default_str();
  sweep_cmd->add_option("--horizon", sweep_a.horizon, "Frames per run (default 2000)");
  sweep_cmd->add_option("--threads", sweep_a.threads, "Worker threads (0 = all cores)");
  sweep_cmd->add_option("--out-dir", sweep_a.out_dir, "Output directory")->capture_default_str();
  sweep_cmd->add_option("--format", sweep_a.formats, "csv, jsonl, plotdata")->delimiter(',');

  auto* analyze_cmd = app.add_subcommand("analyze", "Closed-form model only");
  analyze_c.attach(analyze_cmd);
  analyze_cmd->add_option("--out-dir", analyze_out, "Directory for analysis.json");

  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario");
  validate_c.attach(validate_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) return do_run(run_c, run_a);
    if (*sweep_cmd) return do_sweep(sweep_c, sweep_a);
    if (*analyze_cmd) return do_analyze(analyze_c, analyze_out);
    if (*validate_cmd) return do_validate(validate_c);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
