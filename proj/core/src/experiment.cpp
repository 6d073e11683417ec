#include "dchmac/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "dchmac/errors.hpp"

namespace dchmac {

void check_sweep(const Sweep& s) {
  if (!is_config_field(s.parameter)) {
    throw ConfigError("swept parameter '" + s.parameter + "' is not a scenario field");
  }
  if (s.repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (s.protocols.empty()) throw ConfigError("sweep needs at least one protocol");
  if (s.horizon < 0) throw ConfigError("horizon must be non-negative");
}

ScenarioConfig point_config(const Sweep& s, double value) {
  ScenarioConfig c = s.base;
  set_config_field(c, s.parameter, value);
  if (s.couple) s.couple(c, value);
  validate_config(c);
  return c;
}

nlohmann::json RunRecord::to_json() const {
  nlohmann::json j;
  j["parameter"] = parameter;
  j["protocol"] = std::string(dchmac::to_string(protocol));
  j["rep"] = rep;
  j["seed"] = seed;
  j["ok"] = ok;
  if (ok) {
    auto m = metrics.to_json();
    m.erase("trace");
    j["metrics"] = std::move(m);
  } else {
    j["error"] = error;
  }
  return j;
}

RunRecord run_record_from_json(const nlohmann::json& j) {
  RunRecord r;
  try {
    j.at("parameter").get_to(r.parameter);
    r.protocol = protocol_from_string(j.at("protocol").get<std::string>());
    j.at("rep").get_to(r.rep);
    j.at("seed").get_to(r.seed);
    j.at("ok").get_to(r.ok);
    if (r.ok) {
      r.metrics = metrics_from_json(j.at("metrics"));
    } else {
      j.at("error").get_to(r.error);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad run record: ") + e.what());
  }
  return r;
}

const PointSummary* SweepResult::find(double value, Protocol p) const {
  for (const auto& pt : points) {
    if (pt.parameter == value && pt.protocol == p) return &pt;
  }
  return nullptr;
}

std::vector<double> SweepResult::series(Protocol p, double PointSummary::*field) const {
  std::vector<double> out;
  for (const auto& pt : points) {
    if (pt.protocol == p) out.push_back(pt.*field);
  }
  return out;
}

namespace {

struct Cell {
  std::size_t value_index;
  std::size_t protocol_index;
  int rep;
};

void mean_sd(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (xs.empty()) return;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

SweepResult run_sweep(const Sweep& s, int threads) {
  check_sweep(s);
  const std::size_t P = s.protocols.size();
  const auto reps = static_cast<std::size_t>(s.repetitions);

  std::vector<Cell> cells;
  for (std::size_t v = 0; v < s.values.size(); ++v) {
    for (std::size_t p = 0; p < P; ++p) {
      for (int r = 0; r < s.repetitions; ++r) cells.push_back({v, p, r});
    }
  }

  SweepResult out;
  out.parameter = s.parameter;
  out.figure = s.figure;
  out.runs.resize(cells.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      const Cell& c = cells[k];
      RunRecord& rec = out.runs[k];
      rec.parameter = s.values[c.value_index];
      rec.protocol = s.protocols[c.protocol_index];
      rec.rep = c.rep;
      rec.seed = s.base_seed + c.value_index * reps + static_cast<std::uint64_t>(c.rep);
      try {
        ScenarioConfig cfg = point_config(s, rec.parameter);
        cfg.rng_seed = rec.seed;
        rec.metrics = run(validate_config(cfg), rec.protocol, s.horizon,
                          RunOptions{.keep_trace = s.keep_trace});
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
        rec.metrics = MetricsReport{};
        rec.metrics.protocol = rec.protocol;
      }
    }
  };
  int n = std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  }

  for (std::size_t v = 0; v < s.values.size(); ++v) {
    std::optional<double> analytic;
    try {
      analytic = analyze(validate_config(point_config(s, s.values[v]))).S;
    } catch (const std::exception&) {
      // The overlay is best effort; points the model cannot solve stay empty.
    }
    for (std::size_t p = 0; p < P; ++p) {
      PointSummary pt;
      pt.parameter = s.values[v];
      pt.protocol = s.protocols[p];
      pt.analytic_total = analytic;
      std::vector<double> tot, intra, inter, cons, diss;
      for (std::size_t r = 0; r < reps; ++r) {
        const RunRecord& rec = out.runs[(v * P + p) * reps + r];
        if (!rec.ok) {
          ++pt.failed;
          continue;
        }
        ++pt.runs;
        tot.push_back(rec.metrics.throughput_total);
        intra.push_back(rec.metrics.throughput_intra);
        inter.push_back(rec.metrics.throughput_inter);
        cons.push_back(rec.metrics.energy_consumed);
        diss.push_back(rec.metrics.energy_dissipated);
      }
      double unused;
      mean_sd(tot, pt.mean_total, pt.sd_total);
      mean_sd(intra, pt.mean_intra, unused);
      mean_sd(inter, pt.mean_inter, unused);
      mean_sd(cons, pt.mean_energy_consumed, unused);
      mean_sd(diss, pt.mean_dissipated, pt.sd_dissipated);
      out.points.push_back(pt);
    }
  }
  return out;
}

const std::vector<std::string>& figure_names() {
  static const std::vector<std::string> names{"fig6", "fig7",  "fig8", "fig9",
                                              "fig10", "fig11", "fig12"};
  return names;
}

Sweep figure_sweep(std::string_view name, const ScenarioConfig& base) {
  Sweep s;
  s.base = base;
  s.figure = std::string(name);
  const Protocol all[] = {Protocol::DCHMAC, Protocol::FMMAC, Protocol::FLAT80211};

  if (name == "fig6") {
    // Cluster size on the axis; the cluster count follows from N. Queues
    // are kept full so frame capacity, not demand, shapes the curve.
    s.parameter = "cluster_capacity";
    s.values = {10, 20, 30, 40, 50};
    s.base.intra_arrival_rate = 1000.0;
    s.base.inter_arrival_rate = 1000.0;
    s.couple = [](ScenarioConfig& c, double v) {
      c.target_clusters = static_cast<int>(std::ceil(c.total_nodes / v));
    };
  } else if (name == "fig7") {
    // Per-CM demand stays fixed; the share addressed to other clusters
    // grows as (M-1)/M.
    s.parameter = "target_clusters";
    for (int m = 2; m <= 10; ++m) s.values.push_back(m);
    s.couple = [cap = base.cluster_capacity](ScenarioConfig& c, double v) {
      int m = static_cast<int>(v);
      c.cluster_capacity =
          std::max(cap, static_cast<int>(std::ceil(static_cast<double>(c.total_nodes) / m)));
      double lambda = c.intra_arrival_rate + c.inter_arrival_rate;
      c.intra_arrival_rate = lambda / m;
      c.inter_arrival_rate = lambda * (m - 1) / m;
    };
  } else if (name == "fig8") {
    s.parameter = "mobility_rate";
    s.values = {0, 1, 2, 3, 4, 6, 8, 10};
  } else if (name == "fig9") {
    s.parameter = "intra_arrival_rate";
    s.values = {5, 10, 20, 40, 80, 160};
    s.protocols = {Protocol::DCHMAC};
  } else if (name == "fig10") {
    s.parameter = "mobility_rate";
    s.values = {0, 1, 2, 3, 4, 6, 8, 10};
    s.protocols = {Protocol::DCHMAC};
    s.base.intra_arrival_rate = 2 * base.intra_arrival_rate;
  } else if (name == "fig11") {
    // Light, balanced load: both cluster protocols carry the same traffic,
    // so head drain reflects the division of duties.
    s.parameter = "inter_arrival_rate";
    s.values = {0.8};
    s.base.intra_arrival_rate = 2.0;
    s.protocols.assign(std::begin(all), std::end(all));
    s.horizon = 3000;
    s.keep_trace = true;
  } else if (name == "fig12") {
    // Demand stops at what the single-head baseline can still carry.
    s.parameter = "inter_arrival_rate";
    s.values = {0.02, 0.1, 0.3, 0.6, 1.0};
    s.base.intra_arrival_rate = 0.5;
    s.protocols.assign(std::begin(all), std::end(all));
  } else {
    throw ConfigError("unknown figure '" + std::string(name) + "'");
  }
  return s;
}

OutputFormat output_format_from_string(std::string_view s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "jsonl") return OutputFormat::Jsonl;
  if (s == "plotdata" || s == "dat") return OutputFormat::Plotdata;
  throw ConfigError("unknown output format '" + std::string(s) + "'");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string to_csv(const SweepResult& r) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& rec : r.runs) {
    os << format_number(rec.parameter) << ',' << to_string(rec.protocol) << ',' << rec.rep;
    if (!rec.ok) {
      os << ",,,,,,,,\n";
      continue;
    }
    const auto& m = rec.metrics;
    os << ',' << format_number(m.throughput_total) << ',' << format_number(m.throughput_intra)
       << ',' << format_number(m.throughput_inter) << ',' << format_number(m.energy_consumed)
       << ',' << format_number(m.energy_dissipated) << ',' << m.delivered << ',' << m.lost
       << ',' << m.collided << '\n';
  }
  return os.str();
}

std::string to_jsonl(const SweepResult& r) {
  std::string out;
  for (const auto& rec : r.runs) {
    out += rec.to_json().dump();
    out += '\n';
  }
  return out;
}

std::string to_plotdata(const SweepResult& r) {
  std::ostringstream os;
  std::vector<Protocol> order;
  for (const auto& pt : r.points) {
    if (std::find(order.begin(), order.end(), pt.protocol) == order.end()) {
      order.push_back(pt.protocol);
    }
  }
  if (r.figure == "fig11") {
    os << "# time_s normalized_head_energy\n";
    for (Protocol p : order) {
      // Mean curve over the successful repetitions of the first point.
      std::vector<double> sum;
      std::vector<int> cnt;
      double dt = 0.0;
      for (const auto& rec : r.runs) {
        if (rec.protocol != p || !rec.ok || rec.parameter != r.runs.front().parameter) continue;
        dt = rec.metrics.frame_duration;
        const auto& tr = rec.metrics.trace;
        if (sum.size() < tr.size()) {
          sum.resize(tr.size(), 0.0);
          cnt.resize(tr.size(), 0);
        }
        for (std::size_t k = 0; k < tr.size(); ++k) {
          sum[k] += tr[k].head_energy;
          ++cnt[k];
        }
      }
      os << "\n\n# " << to_string(p) << '\n';
      for (std::size_t k = 0; k < sum.size(); ++k) {
        os << format_number(static_cast<double>(k + 1) * dt) << ' '
           << format_number(sum[k] / cnt[k]) << '\n';
      }
    }
    return os.str();
  }
  bool energy = r.figure == "fig12";
  os << "# " << r.parameter << (energy ? " energy_dissipated\n" : " throughput_total\n");
  for (Protocol p : order) {
    os << "\n\n# " << to_string(p) << '\n';
    for (const auto& pt : r.points) {
      if (pt.protocol != p || pt.runs == 0) continue;
      os << format_number(pt.parameter) << ' '
         << format_number(energy ? pt.mean_dissipated : pt.mean_total) << '\n';
    }
  }
  return os.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing", path.string());
  f << text;
  f.close();
  if (!f) throw IoError("write failed", path.string());
}

}  // namespace

std::vector<std::string> emit_outputs(const SweepResult& r, const std::string& dir,
                                      const std::vector<OutputFormat>& formats,
                                      const std::string& stem) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory", dir);
  std::string base = !stem.empty() ? stem : (!r.figure.empty() ? r.figure : "sweep");

  std::vector<std::string> written;
  for (OutputFormat f : formats) {
    fs::path p = fs::path(dir) / base;
    switch (f) {
      case OutputFormat::Csv:
        p += ".csv";
        write_file(p, to_csv(r));
        break;
      case OutputFormat::Jsonl:
        p += ".jsonl";
        write_file(p, to_jsonl(r));
        break;
      case OutputFormat::Plotdata:
        p += ".dat";
        write_file(p, to_plotdata(r));
        break;
    }
    written.push_back(p.string());
  }
  return written;
}

}  // namespace dchmac
