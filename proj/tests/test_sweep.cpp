#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "a5opt/sweep.hpp"

using namespace a5opt;
namespace fs = std::filesystem;

namespace {

SweepSpec tiny_spec() {
  SweepSpec spec;
  spec.ttt_values = {64};
  spec.th1_range = {-106, -96, 10};
  spec.th2_range = {-110, -100, 10};
  spec.seeds = {1, 2};
  spec.duration_s = 4.0;
  spec.warmup_s = 1.0;
  return spec;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("a5opt_sweep_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("cop grid cardinalities and ordering") {
  SweepSpec def;
  const auto grid = cop_grid(def);
  CHECK(grid.size() == 5u * 31u * 31u);  // 4805

  SweepSpec nine;
  nine.ttt_values = {64};
  nine.th1_range = {-120, -90, 15};
  nine.th2_range = {-120, -90, 15};
  CHECK(cop_grid(nine).size() == 9);

  // Lexicographic (ttt, th1, th2), deterministic across calls.
  const auto again = cop_grid(def);
  REQUIRE(grid.size() == again.size());
  for (size_t i = 1; i < grid.size(); ++i) CHECK(grid[i - 1] < grid[i]);
  CHECK(grid.front() == CopVector{64, -120.0, -120.0});
  CHECK(grid.back() == CopVector{512, -90.0, -90.0});
}

TEST_CASE("sweep spec validation") {
  SweepSpec s;
  s.ttt_values = {100};  // not a multiple of 32
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SweepSpec{};
  s.th1_range = {-120, -90, 7};  // 7 does not divide 30
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SweepSpec{};
  s.seeds.clear();
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SweepSpec{};
  s.warmup_s = 200.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("dataset CSV round-trips") {
  TempDir dir("roundtrip");
  std::vector<DatasetRow> rows = {
      {{64, -106, -110}, 1, {-90.123456, 87.5}, {7, 1}},
      {{64, -96, -100}, 2, {-89.0, 100.0}, {0, 0}},
  };
  const std::string path = (dir.path / "dataset.csv").string();
  write_dataset_csv(path, rows);
  const auto back = read_dataset_csv(path);
  REQUIRE(back.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].cop == rows[i].cop);
    CHECK(back[i].seed == rows[i].seed);
    CHECK(back[i].kpi.mean_rsrp_dbm == doctest::Approx(rows[i].kpi.mean_rsrp_dbm).epsilon(1e-9));
    CHECK(back[i].counters.hos == rows[i].counters.hos);
  }
}

TEST_CASE("run_sweep produces one row per grid point and seed") {
  const NetworkLayout layout = build_layout(NetworkConfig{});
  const SweepSpec spec = tiny_spec();
  const SweepOutcome out = run_sweep(layout, MobilityConfig{}, EventConfig{}, spec);
  CHECK(out.dataset.rows.size() == 4u * 2u);
  CHECK(out.executed == 8);
  CHECK(out.skipped == 0);
  CHECK(!out.dataset.scenario_fingerprint.empty());
  // No duplicate keys.
  for (size_t i = 1; i < out.dataset.rows.size(); ++i) {
    const auto& a = out.dataset.rows[i - 1];
    const auto& b = out.dataset.rows[i];
    CHECK((a.cop != b.cop || a.seed != b.seed));
  }
}

TEST_CASE("sweep output is byte-identical across parallelism degrees") {
  const NetworkLayout layout = build_layout(NetworkConfig{});
  const SweepSpec spec = tiny_spec();
  TempDir dir("parallel");
  SweepOptions p1;
  p1.parallelism = 1;
  p1.csv_path = (dir.path / "p1.csv").string();
  SweepOptions p8;
  p8.parallelism = 8;
  p8.csv_path = (dir.path / "p8.csv").string();
  run_sweep(layout, MobilityConfig{}, EventConfig{}, spec, p1);
  run_sweep(layout, MobilityConfig{}, EventConfig{}, spec, p8);
  CHECK(read_file(p1.csv_path) == read_file(p8.csv_path));
}

TEST_CASE("an interrupted sweep resumes by key") {
  const NetworkLayout layout = build_layout(NetworkConfig{});
  const SweepSpec spec = tiny_spec();
  TempDir dir("resume");
  const std::string csv = (dir.path / "dataset.csv").string();
  SweepOptions opt;
  opt.parallelism = 2;
  opt.csv_path = csv;
  const SweepOutcome full = run_sweep(layout, MobilityConfig{}, EventConfig{}, spec, opt);
  const std::string full_bytes = read_file(csv);

  // Drop 3 rows and resume: only those 3 runs execute, bytes come back.
  auto rows = read_dataset_csv(csv);
  rows.erase(rows.begin() + 1);
  rows.erase(rows.begin() + 3);
  rows.pop_back();
  write_dataset_csv(csv, rows);
  opt.resume = true;
  const SweepOutcome resumed = run_sweep(layout, MobilityConfig{}, EventConfig{}, spec, opt);
  CHECK(resumed.executed == 3);
  CHECK(resumed.skipped == 5);
  CHECK(read_file(csv) == full_bytes);

  // Resuming a complete dataset runs nothing.
  const SweepOutcome noop = run_sweep(layout, MobilityConfig{}, EventConfig{}, spec, opt);
  CHECK(noop.executed == 0);
  CHECK(noop.skipped == 8);
  CHECK(read_file(csv) == full_bytes);
  CHECK(full.dataset.rows.size() == 8);
}

TEST_CASE("resume refuses a dataset from a different scenario") {
  const NetworkLayout layout = build_layout(NetworkConfig{});
  const SweepSpec spec = tiny_spec();
  TempDir dir("fingerprint");
  const std::string csv = (dir.path / "dataset.csv").string();
  SweepOptions opt;
  opt.csv_path = csv;
  run_sweep(layout, MobilityConfig{}, EventConfig{}, spec, opt);

  NetworkConfig other_net;
  other_net.tx_power_dbm = 33.0;
  const NetworkLayout other = build_layout(other_net);
  opt.resume = true;
  CHECK_THROWS_AS(run_sweep(other, MobilityConfig{}, EventConfig{}, spec, opt),
                  std::invalid_argument);
}

TEST_CASE("scenario fingerprint tracks configs but not the sweep grid") {
  ToolConfig a;
  ToolConfig b;
  b.sweep.th1_range.step_db = 3;  // grid resolution does not change the scenario
  CHECK(scenario_fingerprint(a) == scenario_fingerprint(b));
  ToolConfig c;
  c.network.tx_power_dbm = 31.0;
  CHECK(scenario_fingerprint(a) != scenario_fingerprint(c));
  ToolConfig d;
  d.event.rlf_threshold_dbm = -100.0;
  CHECK(scenario_fingerprint(a) != scenario_fingerprint(d));
}

TEST_CASE("tool config JSON: defaults, strict keys, bad types") {
  const ToolConfig def = tool_config_from_json(nlohmann::json::object());
  CHECK(def.network.area_side_m == 2000.0);
  CHECK(def.sweep.ttt_values.size() == 5);

  nlohmann::json partial = {{"sweep", {{"ttt_values", {64}}, {"seeds", {1, 2}}}}};
  const ToolConfig p = tool_config_from_json(partial);
  CHECK(p.sweep.ttt_values == std::vector<int>{64});
  CHECK(p.sweep.th1_range.min_dbm == -120);

  nlohmann::json typo = {{"network", {{"area_sid_m", 100}}}};
  CHECK_THROWS_AS(tool_config_from_json(typo), std::invalid_argument);
  nlohmann::json bad_type = {{"network", {{"area_side_m", "wide"}}}};
  CHECK_THROWS_AS(tool_config_from_json(bad_type), std::invalid_argument);
  nlohmann::json bad_value = {{"network", {{"n_macro_sites", 0}}}};
  CHECK_THROWS_AS(tool_config_from_json(bad_value), std::invalid_argument);
}
