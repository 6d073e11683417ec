#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dchmac/errors.hpp"
#include "dchmac/experiment.hpp"

using namespace dchmac;

namespace {

Sweep tiny() {
  Sweep s;
  s.base.total_nodes = 40;
  s.base.target_clusters = 2;
  s.base.cluster_capacity = 25;
  s.base.intra_arrival_rate = 20;
  s.base.inter_arrival_rate = 20;
  s.parameter = "cluster_capacity";
  s.values = {20, 25};
  s.repetitions = 2;
  s.horizon = 15;
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("dchmac_exp_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Sweep, RejectsBadDefinitions) {
  Sweep s = tiny();
  s.parameter = "not_a_field";
  EXPECT_THROW(check_sweep(s), ConfigError);
  s = tiny();
  s.repetitions = 0;
  EXPECT_THROW(check_sweep(s), ConfigError);
}

TEST(Sweep, TableShapeAndOrdering) {
  SweepResult r = run_sweep(tiny());
  ASSERT_EQ(r.runs.size(), 2u * 2u * 2u);
  ASSERT_EQ(r.points.size(), 4u);
  EXPECT_EQ(r.runs[0].parameter, 20);
  EXPECT_EQ(r.runs[0].protocol, Protocol::DCHMAC);
  EXPECT_EQ(r.runs[1].rep, 1);
  EXPECT_EQ(r.runs.back().parameter, 25);
  EXPECT_EQ(r.runs.back().protocol, Protocol::FMMAC);
  for (const auto& pt : r.points) {
    EXPECT_EQ(pt.runs, 2);
    EXPECT_EQ(pt.failed, 0);
    EXPECT_TRUE(pt.analytic_total.has_value());
  }
  ASSERT_NE(r.find(25, Protocol::FMMAC), nullptr);
  EXPECT_EQ(r.series(Protocol::DCHMAC, &PointSummary::mean_total).size(), 2u);
}

TEST(Sweep, SeedsAreSharedAcrossProtocols) {
  SweepResult r = run_sweep(tiny());
  EXPECT_EQ(r.runs[0].seed, r.runs[2].seed);
  EXPECT_NE(r.runs[0].seed, r.runs[1].seed);
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
  std::string one = to_csv(run_sweep(tiny(), 1));
  std::string four = to_csv(run_sweep(tiny(), 4));
  EXPECT_EQ(one, four);
}

TEST(Sweep, InvalidPointIsMarkedNotFatal) {
  Sweep s = tiny();
  s.values = {25, 1};  // capacity 1 is invalid
  SweepResult r = run_sweep(s);
  const PointSummary* bad = r.find(1, Protocol::DCHMAC);
  ASSERT_NE(bad, nullptr);
  EXPECT_EQ(bad->failed, 2);
  EXPECT_EQ(r.find(25, Protocol::DCHMAC)->failed, 0);
  bool any_error = false;
  for (const auto& run : r.runs) any_error |= !run.ok && !run.error.empty();
  EXPECT_TRUE(any_error);
}

TEST(Outputs, CsvHeaderAndRows) {
  SweepResult r = run_sweep(tiny());
  std::string csv = to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 8);
}

TEST(Outputs, JsonlRoundTrip) {
  SweepResult r = run_sweep(tiny());
  std::istringstream in(to_jsonl(r));
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    ASSERT_LT(i, r.runs.size());
    RunRecord back = run_record_from_json(nlohmann::json::parse(line));
    EXPECT_EQ(back.to_json(), r.runs[i].to_json());
    ++i;
  }
  EXPECT_EQ(i, r.runs.size());
}

TEST(Outputs, CsvAndJsonlListTheSameRuns) {
  SweepResult r = run_sweep(tiny());
  std::istringstream csv(to_csv(r));
  std::istringstream jsonl(to_jsonl(r));
  std::string row, rec;
  std::getline(csv, row);
  while (std::getline(csv, row)) {
    ASSERT_TRUE(std::getline(jsonl, rec));
    auto j = nlohmann::json::parse(rec);
    std::string key = format_number(j.at("parameter").get<double>()) + "," +
                      j.at("protocol").get<std::string>() + "," +
                      std::to_string(j.at("rep").get<int>()) + ",";
    EXPECT_EQ(row.rfind(key, 0), 0u) << row << " vs " << key;
  }
  EXPECT_FALSE(std::getline(jsonl, rec));
}

TEST(Outputs, EmptyResultsWriteHeadersOnly) {
  auto dir = scratch("empty");
  SweepResult r;
  r.parameter = "cluster_capacity";
  auto paths = emit_outputs(r, dir.string(),
                            {OutputFormat::Csv, OutputFormat::Jsonl, OutputFormat::Plotdata});
  EXPECT_EQ(paths.size(), 3u);
  EXPECT_EQ(slurp(dir / "sweep.csv"), std::string(kCsvHeader) + "\n");
  EXPECT_EQ(slurp(dir / "sweep.jsonl"), "");
  std::filesystem::remove_all(dir);
}

TEST(Outputs, RerunIsByteIdentical) {
  auto a = scratch("a");
  auto b = scratch("b");
  std::vector<OutputFormat> all{OutputFormat::Csv, OutputFormat::Jsonl, OutputFormat::Plotdata};
  emit_outputs(run_sweep(tiny()), a.string(), all);
  emit_outputs(run_sweep(tiny()), b.string(), all);
  for (const char* f : {"sweep.csv", "sweep.jsonl", "sweep.dat"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_FALSE(slurp(a / f).empty()) << f;
  }
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}

TEST(Outputs, UnwritableDirectoryIsAnIoError) {
  auto blocker = scratch("blocker");
  { std::ofstream(blocker) << "file, not a directory"; }
  SweepResult r;
  EXPECT_THROW(emit_outputs(r, (blocker / "sub").string(), {OutputFormat::Csv}), IoError);
  std::filesystem::remove(blocker);
}

TEST(Outputs, FormatNames) {
  EXPECT_EQ(output_format_from_string("csv"), OutputFormat::Csv);
  EXPECT_EQ(output_format_from_string("jsonl"), OutputFormat::Jsonl);
  EXPECT_EQ(output_format_from_string("plotdata"), OutputFormat::Plotdata);
  EXPECT_THROW(output_format_from_string("xlsx"), ConfigError);
}

TEST(Figures, PresetsCoverEveryFigure) {
  for (const auto& name : figure_names()) {
    Sweep s = figure_sweep(name);
    EXPECT_NO_THROW(check_sweep(s)) << name;
    EXPECT_FALSE(s.values.empty()) << name;
    EXPECT_EQ(s.figure, name);
  }
  EXPECT_THROW(figure_sweep("fig99"), ConfigError);
  Sweep f6 = figure_sweep("fig6");
  EXPECT_EQ(f6.values, (std::vector<double>{10, 20, 30, 40, 50}));
  EXPECT_EQ(point_config(f6, 20).target_clusters, 10);
}

TEST(Figures, Fig11PlotdataIsATimeSeries) {
  Sweep s = figure_sweep("fig11");
  s.horizon = 5;
  s.repetitions = 1;
  s.base.total_nodes = 40;
  s.base.target_clusters = 2;
  std::string dat = to_plotdata(run_sweep(s));
  EXPECT_NE(dat.find("# DCHMAC"), std::string::npos);
  EXPECT_NE(dat.find("# FLAT80211"), std::string::npos);
  std::istringstream in(dat);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') ++rows;
  }
  EXPECT_EQ(rows, 3 * 5);
}
