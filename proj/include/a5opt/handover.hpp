#pragma once

// Measurement-event engine: A5 (inter-frequency) and baseline A3
// (intra-frequency) entering conditions, per-target TTT timers, handover
// execution with an RLF-dip failure model, and KPI accounting.

#include <cmath>
#include <compare>
#include <cstdio>
#include <fstream>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "a5opt/mobility.hpp"
#include "a5opt/scenario.hpp"
#include "a5opt/text.hpp"

namespace a5opt {

// Stream tags for sub-seeding the independent random sources of one run.
inline constexpr std::uint64_t kShadowStreamTag = 0x5ad0;
inline constexpr std::uint64_t kMobilityStreamTag = 0x30b1;

// One point in the A5 parameter space. Thresholds are held as doubles so
// the sensitivity module can probe the box continuously; sweep grids and
// the CLI only ever produce integer dBm values.
struct CopVector {
  int ttt_ms = 256;
  double th1_dbm = -105.0;
  double th2_dbm = -105.0;

  auto operator<=>(const CopVector&) const = default;  // lexicographic (ttt, th1, th2)
};

struct EventConfig {
  CopVector cop;
  double hyst_db = 0.0;
  double cio_db = 0.0;  // applied to every neighbor
  double a3_offset_db = 2.0;
  int a3_ttt_ms = 160;
  // Calibrated so HOSR is non-degenerate across the threshold grid in the
  // default scenario; -inf disables the failure model entirely.
  double rlf_threshold_dbm = -102.0;
  int exec_delay_ms = 64;

  void validate(int step_ms) const {
    if (step_ms <= 0) throw std::invalid_argument("event: step_ms must be > 0");
    if (cop.ttt_ms <= 0 || cop.ttt_ms % step_ms != 0)
      throw std::invalid_argument("event: ttt_ms must be a positive multiple of step_ms");
    if (a3_ttt_ms <= 0 || a3_ttt_ms % step_ms != 0)
      throw std::invalid_argument("event: a3_ttt_ms must be a positive multiple of step_ms");
    if (exec_delay_ms <= 0 || exec_delay_ms % step_ms != 0)
      throw std::invalid_argument("event: exec_delay_ms must be a positive multiple of step_ms");
    if (!std::isfinite(cop.th1_dbm) || !std::isfinite(cop.th2_dbm))
      throw std::invalid_argument("event: thresholds must be finite");
  }
};

struct HoCounters {
  long hos = 0;
  long hof = 0;
  long attempts() const { return hos + hof; }
};

struct KpiSample {
  double mean_rsrp_dbm = 0.0;
  double hosr_pct = 0.0;
};

// A5 entering condition: serving below threshold1 while a target on another
// carrier is above threshold2, both strict.
inline bool a5_entering(double serving_rsrp_dbm, double target_rsrp_dbm,
                        const EventConfig& cfg) {
  return serving_rsrp_dbm + cfg.hyst_db < cfg.cop.th1_dbm &&
         target_rsrp_dbm + cfg.cio_db - cfg.hyst_db > cfg.cop.th2_dbm;
}

// A3 entering condition for same-carrier neighbors, strict.
inline bool a3_entering(double serving_rsrp_dbm, double target_rsrp_dbm,
                        const EventConfig& cfg) {
  return target_rsrp_dbm > serving_rsrp_dbm + cfg.a3_offset_db + cfg.hyst_db;
}

// TTT accumulator step; fires exactly when the condition has held for
// ttt_ms contiguous milliseconds.
inline bool update_ttt(int& accumulated_ms, bool condition_holds, int step_ms, int ttt_ms) {
  accumulated_ms = condition_holds ? accumulated_ms + step_ms : 0;
  return accumulated_ms >= ttt_ms;
}

// Attempt classification: fails iff the serving RSRP dipped below the RLF
// threshold at any step of the execution window.
inline bool resolve_handover(std::span<const double> serving_rsrp_trace,
                             const EventConfig& cfg) {
  for (double r : serving_rsrp_trace)
    if (r < cfg.rlf_threshold_dbm) return false;
  return true;
}

inline double mean_rsrp(std::span<const double> samples_dbm) {
  if (samples_dbm.empty()) throw std::invalid_argument("mean_rsrp: empty sample set");
  double sum = 0.0;
  for (double s : samples_dbm) sum += s;
  return sum / static_cast<double>(samples_dbm.size());
}

// Percent of successful handovers; 100 by convention when nothing was
// attempted (the no-handover corner counts as failure-free).
inline double hosr(const HoCounters& c) {
  if (c.attempts() == 0) return 100.0;
  return 100.0 * static_cast<double>(c.hos) / static_cast<double>(c.attempts());
}

enum class TraceKind { a5_trigger, ho_success, ho_fail, a3_ho };

struct TraceEvent {
  long step = 0;
  int user_id = 0;
  TraceKind kind = TraceKind::a5_trigger;
  int source_cell = -1;
  int target_cell = -1;
  double serving_rsrp_dbm = 0.0;
};

inline const char* trace_kind_name(TraceKind k) {
  switch (k) {
    case TraceKind::a5_trigger: return "a5_trigger";
    case TraceKind::ho_success: return "ho_success";
    case TraceKind::ho_fail: return "ho_fail";
    case TraceKind::a3_ho: return "a3_ho";
  }
  return "?";
}

inline void write_trace_csv(const std::string& path, const std::vector<TraceEvent>& events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open trace file: " + path);
  out << "step,user_id,event,source_cell,target_cell,serving_rsrp\n";
  for (const TraceEvent& e : events) {
    out << e.step << ',' << e.user_id << ',' << trace_kind_name(e.kind) << ',' << e.source_cell
        << ',' << e.target_cell << ',' << fmt_fixed(e.serving_rsrp_dbm, 3) << '\n';
  }
}

struct SimResult {
  KpiSample kpi;
  HoCounters counters;
};

namespace detail {

struct PendingAttempt {
  int target = -1;
  int steps_left = 0;
  bool failed = false;
  bool counted = false;
  bool active() const { return target >= 0; }
};

}  // namespace detail

// One deterministic simulation run.
//
// Per step and user: advance, measure all cells, then either progress a
// pending handover execution or evaluate events. A5 runs against the
// strongest cell on a different carrier than the serving one (per-target
// timers: switching target restarts accumulation); A3 runs against every
// same-carrier neighbor and executes instantly when its TTT fires. An A5
// attempt occupies the execution window during which the serving-RSRP dip
// decides success vs failure; on failure the user re-attaches via
// best_server. Only A5 attempts feed the counters, and KPI accumulation
// starts after the warm-up. Attempts still pending when the run ends are
// classified on their partial window so hos+hof always equals the number
// of counted attempts.
inline SimResult run_simulation(const NetworkLayout& layout, const MobilityConfig& mob,
                                const EventConfig& ev, std::uint64_t seed, double duration_s,
                                int step_ms, double warmup_s = 10.0,
                                const ShadowField* shadow_in = nullptr,
                                std::vector<TraceEvent>* trace = nullptr) {
  layout.config.validate();
  mob.validate();
  ev.validate(step_ms);
  if (!(duration_s > 0.0)) throw std::invalid_argument("run_simulation: duration must be > 0");
  if (warmup_s < 0.0) throw std::invalid_argument("run_simulation: warmup must be >= 0");
  const long n_steps = static_cast<long>(std::floor(duration_s * 1000.0 / step_ms + 1e-9));
  const long warmup_steps = static_cast<long>(std::ceil(warmup_s * 1000.0 / step_ms - 1e-9));
  if (n_steps <= warmup_steps)
    throw std::invalid_argument("run_simulation: duration must exceed the warm-up");

  ShadowField local_shadow;
  const ShadowField* shadow = shadow_in;
  if (shadow == nullptr) {
    if (layout.config.shadowing_std_db > 0.0)
      local_shadow = ShadowField(layout, derive_stream(seed, kShadowStreamTag));
    shadow = &local_shadow;
  }

  std::vector<User> users =
      spawn_users(mob, layout.config.area_side_m, derive_stream(seed, kMobilityStreamTag));
  if (users.empty()) throw std::invalid_argument("run_simulation: zero users");

  const size_t n_cells = layout.cells.size();
  for (User& u : users) {
    u.serving_cell = best_server(layout, u.position, *shadow);
    u.a5_accum_ms.assign(n_cells, 0);
    u.a3_accum_ms.assign(n_cells, 0);
  }
  std::vector<detail::PendingAttempt> pending(users.size());

  const double dt = step_ms / 1000.0;
  const int exec_steps = ev.exec_delay_ms / step_ms;
  const double side = layout.config.area_side_m;

  HoCounters counters;
  double rsrp_sum = 0.0;
  long rsrp_n = 0;
  std::vector<double> r(n_cells);

  auto reset_timers = [&](User& u) {
    std::fill(u.a5_accum_ms.begin(), u.a5_accum_ms.end(), 0);
    std::fill(u.a3_accum_ms.begin(), u.a3_accum_ms.end(), 0);
  };

  auto resolve_pending = [&](User& u, detail::PendingAttempt& p, long step) {
    const int source = u.serving_cell;
    if (!p.failed) {
      if (p.counted) ++counters.hos;
      u.serving_cell = p.target;
      if (trace) trace->push_back({step, u.id, TraceKind::ho_success, source, p.target, r[source]});
    } else {
      if (p.counted) ++counters.hof;
      u.serving_cell = best_server(layout, u.position, *shadow);  // RLF + re-establishment
      if (trace) trace->push_back({step, u.id, TraceKind::ho_fail, source, p.target, r[source]});
    }
    reset_timers(u);
    p = detail::PendingAttempt{};
  };

  for (long step = 0; step < n_steps; ++step) {
    const bool counted_step = step >= warmup_steps;
    for (User& u : users) {
      advance(u, dt, side, mob.pause_s);
      for (size_t c = 0; c < n_cells; ++c)
        r[c] = rsrp_dbm(layout.cells[c], u.position, *shadow, layout.config);

      detail::PendingAttempt& p = pending[u.id];
      if (p.active()) {
        if (r[u.serving_cell] < ev.rlf_threshold_dbm) p.failed = true;
        if (--p.steps_left == 0) resolve_pending(u, p, step);
      } else {
        const double serving_band = layout.cells[u.serving_cell].band_ghz;
        // A5: target is the strongest cell on any other carrier.
        int t5 = -1;
        for (size_t c = 0; c < n_cells; ++c) {
          if (layout.cells[c].band_ghz == serving_band) continue;
          if (t5 < 0 || r[c] > r[t5]) t5 = static_cast<int>(c);
        }
        bool fired5 = false;
        for (size_t c = 0; c < n_cells; ++c) {
          const bool holds = static_cast<int>(c) == t5 &&
                             a5_entering(r[u.serving_cell], r[c], ev);
          if (update_ttt(u.a5_accum_ms[c], holds, step_ms, ev.cop.ttt_ms) && holds) fired5 = true;
        }
        if (fired5) {
          p.target = t5;
          p.steps_left = exec_steps;
          p.failed = r[u.serving_cell] < ev.rlf_threshold_dbm;
          p.counted = counted_step;
          reset_timers(u);
          if (trace)
            trace->push_back({step, u.id, TraceKind::a5_trigger, u.serving_cell, t5,
                              r[u.serving_cell]});
        } else {
          // A3 baseline keeps same-carrier mobility alive.
          int fired3 = -1;
          for (size_t c = 0; c < n_cells; ++c) {
            const bool same = layout.cells[c].band_ghz == serving_band &&
                              static_cast<int>(c) != u.serving_cell;
            const bool holds = same && a3_entering(r[u.serving_cell], r[c], ev);
            if (update_ttt(u.a3_accum_ms[c], holds, step_ms, ev.a3_ttt_ms) && holds) {
              if (fired3 < 0 || r[c] > r[fired3]) fired3 = static_cast<int>(c);
            }
          }
          if (fired3 >= 0) {
            if (trace)
              trace->push_back({step, u.id, TraceKind::a3_ho, u.serving_cell, fired3,
                                r[u.serving_cell]});
            u.serving_cell = fired3;
            reset_timers(u);
          }
        }
      }

      if (counted_step) {
        rsrp_sum += r[u.serving_cell];
        ++rsrp_n;
      }
    }
  }

  // Classify attempts cut off by the end of the run on their partial window.
  for (User& u : users) {
    detail::PendingAttempt& p = pending[u.id];
    if (p.active()) {
      for (size_t c = 0; c < n_cells; ++c)
        r[c] = rsrp_dbm(layout.cells[c], u.position, *shadow, layout.config);
      resolve_pending(u, p, n_steps);
    }
  }

  SimResult res;
  res.counters = counters;
  res.kpi.mean_rsrp_dbm = rsrp_sum / static_cast<double>(rsrp_n);
  res.kpi.hosr_pct = hosr(counters);
  return res;
}

}  // namespace a5opt
