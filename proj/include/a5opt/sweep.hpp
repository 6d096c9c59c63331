#pragma once

// COP grid enumeration and the parallel sweep harness, plus the JSON
// configuration file, dataset CSV and manifest formats shared by the
// pipeline stages. Rows are computed independently (one simulation per
// (COP, seed)), appended to the CSV as they finish so an interrupted sweep
// can resume by key, and the final file is rewritten sorted so its bytes
// do not depend on worker scheduling.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "a5opt/handover.hpp"
#include "a5opt/text.hpp"
#include "a5opt/version.hpp"

namespace a5opt {

struct ThresholdRange {
  int min_dbm = -120;
  int max_dbm = -90;
  int step_db = 1;
};

struct SweepSpec {
  std::vector<int> ttt_values = {64, 128, 256, 320, 512};
  ThresholdRange th1_range;
  ThresholdRange th2_range;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  double duration_s = 120.0;
  int step_ms = 32;
  double warmup_s = 10.0;

  void validate() const {
    if (ttt_values.empty()) throw std::invalid_argument("sweep: ttt_values must be non-empty");
    if (step_ms <= 0) throw std::invalid_argument("sweep: step_ms must be > 0");
    for (int t : ttt_values)
      if (t <= 0 || t % step_ms != 0)
        throw std::invalid_argument("sweep: every ttt must be a positive multiple of step_ms");
    for (const ThresholdRange* r : {&th1_range, &th2_range}) {
      if (r->step_db <= 0) throw std::invalid_argument("sweep: threshold step must be > 0");
      if (r->max_dbm < r->min_dbm)
        throw std::invalid_argument("sweep: threshold range must be non-empty");
      if ((r->max_dbm - r->min_dbm) % r->step_db != 0)
        throw std::invalid_argument("sweep: threshold step must divide the range width");
    }
    if (seeds.empty()) throw std::invalid_argument("sweep: seeds must be non-empty");
    if (!(duration_s > 0.0)) throw std::invalid_argument("sweep: duration_s must be > 0");
    if (warmup_s < 0.0 || warmup_s * 1000.0 >= duration_s * 1000.0)
      throw std::invalid_argument("sweep: warmup must be >= 0 and below duration");
  }
};

// Cartesian product in lexicographic (ttt, th1, th2) order.
inline std::vector<CopVector> cop_grid(const SweepSpec& spec) {
  spec.validate();
  std::vector<CopVector> grid;
  for (int ttt : spec.ttt_values)
    for (int t1 = spec.th1_range.min_dbm; t1 <= spec.th1_range.max_dbm; t1 += spec.th1_range.step_db)
      for (int t2 = spec.th2_range.min_dbm; t2 <= spec.th2_range.max_dbm; t2 += spec.th2_range.step_db)
        grid.push_back({ttt, static_cast<double>(t1), static_cast<double>(t2)});
  return grid;
}

struct DatasetRow {
  CopVector cop;
  std::uint64_t seed = 0;
  KpiSample kpi;
  HoCounters counters;
};

inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr const char* kDatasetCsvHeader =
    "ttt_ms,th1_dbm,th2_dbm,seed,mean_rsrp_dbm,hosr_pct,hos,hof";

struct Dataset {
  std::vector<DatasetRow> rows;
  std::string scenario_fingerprint;
  int schema_version = kDatasetSchemaVersion;
};

// ---------------------------------------------------------------------------
// JSON adapters for the configuration structs (strict about unknown keys so
// config typos fail loudly instead of silently running defaults).
// ---------------------------------------------------------------------------

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                       const char* section) {
  if (!j.is_object())
    throw std::invalid_argument(std::string("config section '") + section + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) known = true;
    if (!known)
      throw std::invalid_argument(std::string("unknown key '") + it.key() + "' in section '" +
                                  section + "'");
  }
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(std::string("bad value type for key '") + key + "'");
  }
}

}  // namespace detail

inline nlohmann::json to_json(const NetworkConfig& c) {
  return {{"area_side_m", c.area_side_m},
          {"n_macro_sites", c.n_macro_sites},
          {"sectors_per_site", c.sectors_per_site},
          {"macro_bands", c.macro_bands},
          {"small_cells_per_site", c.small_cells_per_site},
          {"small_band_ghz", c.small_band_ghz},
          {"macro_height_m", c.macro_height_m},
          {"small_height_m", c.small_height_m},
          {"tx_power_dbm", c.tx_power_dbm},
          {"pathloss_exponent", c.pathloss_exponent},
          {"shadowing_std_db", c.shadowing_std_db},
          {"shadowing_corr_dist_m", c.shadowing_corr_dist_m},
          {"bandwidth_mhz", c.bandwidth_mhz},
          {"total_prbs", c.total_prbs}};
}

inline NetworkConfig network_from_json(const nlohmann::json& j) {
  detail::check_keys(j,
                     {"area_side_m", "n_macro_sites", "sectors_per_site", "macro_bands",
                      "small_cells_per_site", "small_band_ghz", "macro_height_m", "small_height_m",
                      "tx_power_dbm", "pathloss_exponent", "shadowing_std_db",
                      "shadowing_corr_dist_m", "bandwidth_mhz", "total_prbs"},
                     "network");
  NetworkConfig c;
  detail::read_opt(j, "area_side_m", c.area_side_m);
  detail::read_opt(j, "n_macro_sites", c.n_macro_sites);
  detail::read_opt(j, "sectors_per_site", c.sectors_per_site);
  detail::read_opt(j, "macro_bands", c.macro_bands);
  detail::read_opt(j, "small_cells_per_site", c.small_cells_per_site);
  detail::read_opt(j, "small_band_ghz", c.small_band_ghz);
  detail::read_opt(j, "macro_height_m", c.macro_height_m);
  detail::read_opt(j, "small_height_m", c.small_height_m);
  detail::read_opt(j, "tx_power_dbm", c.tx_power_dbm);
  detail::read_opt(j, "pathloss_exponent", c.pathloss_exponent);
  detail::read_opt(j, "shadowing_std_db", c.shadowing_std_db);
  detail::read_opt(j, "shadowing_corr_dist_m", c.shadowing_corr_dist_m);
  detail::read_opt(j, "bandwidth_mhz", c.bandwidth_mhz);
  detail::read_opt(j, "total_prbs", c.total_prbs);
  return c;
}

inline nlohmann::json to_json(const MobilityConfig& c) {
  return {{"user_density_per_km2", c.user_density_per_km2},
          {"speed_set_kmh", c.speed_set_kmh},
          {"pause_s", c.pause_s}};
}

inline MobilityConfig mobility_from_json(const nlohmann::json& j) {
  detail::check_keys(j, {"user_density_per_km2", "speed_set_kmh", "pause_s"}, "mobility");
  MobilityConfig c;
  detail::read_opt(j, "user_density_per_km2", c.user_density_per_km2);
  detail::read_opt(j, "speed_set_kmh", c.speed_set_kmh);
  detail::read_opt(j, "pause_s", c.pause_s);
  return c;
}

// The COP itself is not part of the event configuration file; it comes from
// the sweep grid (or the optimizer).
inline nlohmann::json to_json(const EventConfig& c) {
  return {{"hyst_db", c.hyst_db},
          {"cio_db", c.cio_db},
          {"a3_offset_db", c.a3_offset_db},
          {"a3_ttt_ms", c.a3_ttt_ms},
          {"rlf_threshold_dbm", c.rlf_threshold_dbm},
          {"exec_delay_ms", c.exec_delay_ms}};
}

inline EventConfig event_from_json(const nlohmann::json& j) {
  detail::check_keys(
      j, {"hyst_db", "cio_db", "a3_offset_db", "a3_ttt_ms", "rlf_threshold_dbm", "exec_delay_ms"},
      "event");
  EventConfig c;
  detail::read_opt(j, "hyst_db", c.hyst_db);
  detail::read_opt(j, "cio_db", c.cio_db);
  detail::read_opt(j, "a3_offset_db", c.a3_offset_db);
  detail::read_opt(j, "a3_ttt_ms", c.a3_ttt_ms);
  detail::read_opt(j, "rlf_threshold_dbm", c.rlf_threshold_dbm);
  detail::read_opt(j, "exec_delay_ms", c.exec_delay_ms);
  return c;
}

inline nlohmann::json to_json(const ThresholdRange& r) {
  return {{"min", r.min_dbm}, {"max", r.max_dbm}, {"step", r.step_db}};
}

inline ThresholdRange range_from_json(const nlohmann::json& j, const char* section) {
  detail::check_keys(j, {"min", "max", "step"}, section);
  ThresholdRange r;
  detail::read_opt(j, "min", r.min_dbm);
  detail::read_opt(j, "max", r.max_dbm);
  detail::read_opt(j, "step", r.step_db);
  return r;
}

inline nlohmann::json to_json(const SweepSpec& s) {
  return {{"ttt_values", s.ttt_values},
          {"th1_range", to_json(s.th1_range)},
          {"th2_range", to_json(s.th2_range)},
          {"seeds", s.seeds},
          {"duration_s", s.duration_s},
          {"step_ms", s.step_ms},
          {"warmup_s", s.warmup_s}};
}

inline SweepSpec sweep_from_json(const nlohmann::json& j) {
  detail::check_keys(
      j, {"ttt_values", "th1_range", "th2_range", "seeds", "duration_s", "step_ms", "warmup_s"},
      "sweep");
  SweepSpec s;
  detail::read_opt(j, "ttt_values", s.ttt_values);
  if (j.contains("th1_range")) s.th1_range = range_from_json(j.at("th1_range"), "th1_range");
  if (j.contains("th2_range")) s.th2_range = range_from_json(j.at("th2_range"), "th2_range");
  detail::read_opt(j, "seeds", s.seeds);
  detail::read_opt(j, "duration_s", s.duration_s);
  detail::read_opt(j, "step_ms", s.step_ms);
  detail::read_opt(j, "warmup_s", s.warmup_s);
  return s;
}

struct ToolConfig {
  NetworkConfig network;
  MobilityConfig mobility;
  EventConfig event;
  SweepSpec sweep;

  void validate() const {
    network.validate();
    mobility.validate();
    sweep.validate();
    EventConfig ev = event;
    for (int ttt : sweep.ttt_values) {
      ev.cop.ttt_ms = ttt;
      ev.validate(sweep.step_ms);
    }
  }
};

inline nlohmann::json to_json(const ToolConfig& c) {
  return {{"network", to_json(c.network)},
          {"mobility", to_json(c.mobility)},
          {"event", to_json(c.event)},
          {"sweep", to_json(c.sweep)}};
}

inline ToolConfig tool_config_from_json(const nlohmann::json& j) {
  detail::check_keys(j, {"network", "mobility", "event", "sweep"}, "(top level)");
  ToolConfig c;
  if (j.contains("network")) c.network = network_from_json(j.at("network"));
  if (j.contains("mobility")) c.mobility = mobility_from_json(j.at("mobility"));
  if (j.contains("event")) c.event = event_from_json(j.at("event"));
  if (j.contains("sweep")) c.sweep = sweep_from_json(j.at("sweep"));
  c.validate();
  return c;
}

inline ToolConfig load_tool_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed config JSON in " + path + ": " + e.what());
  }
  return tool_config_from_json(j);
}

// Stable fingerprint of everything that defines the scenario except the COP
// under test. Stages refuse to mix artifacts with different fingerprints.
inline std::string scenario_fingerprint(const ToolConfig& cfg) {
  nlohmann::json j = {{"network", to_json(cfg.network)},
                      {"mobility", to_json(cfg.mobility)},
                      {"event", to_json(cfg.event)},
                      {"duration_s", cfg.sweep.duration_s},
                      {"step_ms", cfg.sweep.step_ms},
                      {"warmup_s", cfg.sweep.warmup_s}};
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Dataset CSV + manifest
// ---------------------------------------------------------------------------

inline std::string dataset_row_csv(const DatasetRow& row) {
  std::string s;
  s += fmt_int(row.cop.ttt_ms);
  s += ',';
  s += fmt_int(std::llround(row.cop.th1_dbm));
  s += ',';
  s += fmt_int(std::llround(row.cop.th2_dbm));
  s += ',';
  s += fmt_int(static_cast<long long>(row.seed));
  s += ',';
  s += fmt_fixed(row.kpi.mean_rsrp_dbm, 6);
  s += ',';
  s += fmt_fixed(row.kpi.hosr_pct, 6);
  s += ',';
  s += fmt_int(row.counters.hos);
  s += ',';
  s += fmt_int(row.counters.hof);
  return s;
}

inline std::vector<DatasetRow> read_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty dataset CSV: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDatasetCsvHeader)
    throw std::invalid_argument("unexpected dataset CSV header in " + path);
  std::vector<DatasetRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 8) throw std::invalid_argument("bad dataset CSV row: " + line);
    DatasetRow row;
    row.cop.ttt_ms = static_cast<int>(parse_ll(f[0], "ttt_ms"));
    row.cop.th1_dbm = static_cast<double>(parse_ll(f[1], "th1_dbm"));
    row.cop.th2_dbm = static_cast<double>(parse_ll(f[2], "th2_dbm"));
    row.seed = static_cast<std::uint64_t>(parse_ll(f[3], "seed"));
    row.kpi.mean_rsrp_dbm = parse_double(f[4], "mean_rsrp_dbm");
    row.kpi.hosr_pct = parse_double(f[5], "hosr_pct");
    row.counters.hos = parse_ll(f[6], "hos");
    row.counters.hof = parse_ll(f[7], "hof");
    rows.push_back(row);
  }
  return rows;
}

inline void write_dataset_csv(const std::string& path, const std::vector<DatasetRow>& rows) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write dataset CSV: " + tmp);
    out << kDatasetCsvHeader << '\n';
    for (const DatasetRow& r : rows) out << dataset_row_csv(r) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

inline std::string dataset_manifest_path(const std::string& csv_path) {
  return csv_path + ".manifest.json";
}

inline void write_dataset_manifest(const std::string& csv_path, const ToolConfig& cfg,
                                   size_t row_count) {
  nlohmann::json j = {{"schema_version", kDatasetSchemaVersion},
                      {"tool_version", kToolVersion},
                      {"scenario_fingerprint", scenario_fingerprint(cfg)},
                      {"row_count", row_count},
                      {"config", to_json(cfg)}};
  std::ofstream out(dataset_manifest_path(csv_path), std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write dataset manifest for " + csv_path);
  out << j.dump(2) << '\n';
}

struct DatasetBundle {
  Dataset dataset;
  ToolConfig config;
};

// Loads dataset.csv plus its sidecar manifest (fingerprint + full config).
inline DatasetBundle load_dataset(const std::string& csv_path) {
  DatasetBundle b;
  b.dataset.rows = read_dataset_csv(csv_path);
  const std::string mpath = dataset_manifest_path(csv_path);
  std::ifstream in(mpath, std::ios::binary);
  if (!in) throw std::runtime_error("missing dataset manifest: " + mpath);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed dataset manifest " + mpath + ": " + e.what());
  }
  if (!j.contains("scenario_fingerprint") || !j.contains("config"))
    throw std::invalid_argument("dataset manifest missing required fields: " + mpath);
  b.dataset.scenario_fingerprint = j.at("scenario_fingerprint").get<std::string>();
  detail::read_opt(j, "schema_version", b.dataset.schema_version);
  b.config = tool_config_from_json(j.at("config"));
  return b;
}

// ---------------------------------------------------------------------------
// Parallel sweep
// ---------------------------------------------------------------------------

struct SweepOptions {
  int parallelism = 0;  // 0 -> hardware concurrency
  std::string csv_path;  // empty -> in-memory only (no resume, no flush)
  bool resume = false;
  std::function<void(size_t done, size_t total)> progress;
};

struct SweepOutcome {
  Dataset dataset;
  size_t executed = 0;
  size_t skipped = 0;
};

namespace detail {

struct RowKey {
  int ttt;
  long long th1, th2;
  std::uint64_t seed;
  auto operator<=>(const RowKey&) const = default;
};

inline RowKey row_key(const CopVector& cop, std::uint64_t seed) {
  return {cop.ttt_ms, std::llround(cop.th1_dbm), std::llround(cop.th2_dbm), seed};
}

}  // namespace detail

inline SweepOutcome run_sweep(const NetworkLayout& layout, const MobilityConfig& mob,
                              const EventConfig& base_event, const SweepSpec& spec,
                              const SweepOptions& opt = {}) {
  spec.validate();
  const std::vector<CopVector> grid = cop_grid(spec);

  struct Job {
    CopVector cop;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  jobs.reserve(grid.size() * spec.seeds.size());
  for (const CopVector& cop : grid)
    for (std::uint64_t s : spec.seeds) jobs.push_back({cop, s});

  ToolConfig cfg{layout.config, mob, base_event, spec};
  const std::string fingerprint = scenario_fingerprint(cfg);

  // Resume: keep rows already on disk whose keys belong to this sweep.
  std::map<detail::RowKey, DatasetRow> done;
  if (!opt.csv_path.empty() && opt.resume && std::filesystem::exists(opt.csv_path)) {
    const std::string mpath = dataset_manifest_path(opt.csv_path);
    if (std::filesystem::exists(mpath)) {
      std::ifstream in(mpath, std::ios::binary);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("malformed dataset manifest " + mpath + ": " + e.what());
      }
      const std::string prev = j.value("scenario_fingerprint", "");
      if (!prev.empty() && prev != fingerprint)
        throw std::invalid_argument("resume refused: scenario fingerprint mismatch (" + prev +
                                    " on disk vs " + fingerprint + ")");
    }
    std::map<detail::RowKey, bool> wanted;
    for (const Job& job : jobs) wanted[detail::row_key(job.cop, job.seed)] = true;
    for (const DatasetRow& r : read_dataset_csv(opt.csv_path)) {
      const detail::RowKey k = detail::row_key(r.cop, r.seed);
      if (!wanted.count(k))
        throw std::invalid_argument("resume refused: existing dataset has rows outside this sweep");
      done[k] = r;
    }
  }

  std::vector<Job> todo;
  for (const Job& job : jobs)
    if (!done.count(detail::row_key(job.cop, job.seed))) todo.push_back(job);

  // The shadow realization depends only on (layout, seed); share it across
  // all COP points of the same seed (common random numbers).
  std::map<std::uint64_t, ShadowField> shadows;
  if (layout.config.shadowing_std_db > 0.0)
    for (std::uint64_t s : spec.seeds)
      shadows.emplace(s, ShadowField(layout, derive_stream(s, kShadowStreamTag)));

  std::ofstream append_out;
  if (!opt.csv_path.empty()) {
    const bool fresh = done.empty();
    if (fresh) {
      std::ofstream head(opt.csv_path, std::ios::binary | std::ios::trunc);
      if (!head) throw std::runtime_error("cannot write dataset CSV: " + opt.csv_path);
      head << kDatasetCsvHeader << '\n';
    }
    append_out.open(opt.csv_path, std::ios::binary | std::ios::app);
    if (!append_out) throw std::runtime_error("cannot append to dataset CSV: " + opt.csv_path);
  }

  std::vector<DatasetRow> new_rows;
  new_rows.reserve(todo.size());
  std::mutex mu;
  std::atomic<size_t> next{0};
  std::string first_error;
  size_t done_count = 0;

  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      const Job& job = todo[i];
      EventConfig ev = base_event;
      ev.cop = job.cop;
      try {
        const ShadowField* shadow = nullptr;
        auto it = shadows.find(job.seed);
        if (it != shadows.end()) shadow = &it->second;
        const SimResult res = run_simulation(layout, mob, ev, job.seed, spec.duration_s,
                                             spec.step_ms, spec.warmup_s, shadow);
        DatasetRow row{job.cop, job.seed, res.kpi, res.counters};
        std::lock_guard<std::mutex> lock(mu);
        new_rows.push_back(row);
        if (append_out.is_open()) {
          append_out << dataset_row_csv(row) << '\n';
          append_out.flush();
        }
        ++done_count;
        if (opt.progress) opt.progress(done.size() + done_count, jobs.size());
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "sweep run failed at COP (ttt=" << job.cop.ttt_ms << ", th1=" << job.cop.th1_dbm
            << ", th2=" << job.cop.th2_dbm << ", seed=" << job.seed << "): " << e.what();
        std::lock_guard<std::mutex> lock(mu);
        if (first_error.empty()) first_error = msg.str();
        next.store(todo.size());  // stop claiming further work
        return;
      }
    }
  };

  int n_threads = opt.parallelism > 0
                      ? opt.parallelism
                      : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  n_threads = static_cast<int>(std::min<size_t>(n_threads, std::max<size_t>(1, todo.size())));
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (append_out.is_open()) append_out.close();
  if (!first_error.empty()) throw std::runtime_error(first_error);

  SweepOutcome out;
  out.executed = new_rows.size();
  out.skipped = done.size();
  for (auto& [k, row] : done) out.dataset.rows.push_back(row);
  for (const DatasetRow& r : new_rows) out.dataset.rows.push_back(r);
  std::sort(out.dataset.rows.begin(), out.dataset.rows.end(),
            [](const DatasetRow& a, const DatasetRow& b) {
              return detail::row_key(a.cop, a.seed) < detail::row_key(b.cop, b.seed);
            });
  out.dataset.scenario_fingerprint = fingerprint;

  if (!opt.csv_path.empty()) {
    write_dataset_csv(opt.csv_path, out.dataset.rows);  // canonical sorted bytes
    write_dataset_manifest(opt.csv_path, cfg, out.dataset.rows.size());
  }
  return out;
}

}  // namespace a5opt
