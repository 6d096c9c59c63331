#pragma once

// Joint KPI maximization over the COP box: exhaustive grid search and an
// integer-encoded genetic algorithm, both driving the trained surrogates
// through a weighted min-max-normalized objective.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "a5opt/surrogate.hpp"

namespace a5opt {

struct Objective {
  double alpha = 0.5;
  const TrainedModel* rsrp_model = nullptr;
  const TrainedModel* hosr_model = nullptr;
  double rsrp_min = 0.0, rsrp_max = 0.0;  // dataset-wide KPI extrema
  double hosr_min = 0.0, hosr_max = 0.0;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw std::invalid_argument("objective: alpha must be in [0,1]");
    if (!(rsrp_min < rsrp_max) || !(hosr_min < hosr_max))
      throw std::invalid_argument("objective: normalization bounds must satisfy min < max");
    if (rsrp_model == nullptr || hosr_model == nullptr)
      throw std::invalid_argument("objective: both KPI models are required");
  }

  static double combine(double alpha, double rsrp_norm, double hosr_norm) {
    return alpha * rsrp_norm + (1.0 - alpha) * hosr_norm;
  }

  double rsrp_norm(const CopVector& cop) const {
    const double v = (rsrp_model->predict(cop) - rsrp_min) / (rsrp_max - rsrp_min);
    return std::clamp(v, 0.0, 1.0);
  }

  double hosr_norm(const CopVector& cop) const {
    const double v = (hosr_model->predict(cop) - hosr_min) / (hosr_max - hosr_min);
    return std::clamp(v, 0.0, 1.0);
  }

  double value(const CopVector& cop) const { return combine(alpha, rsrp_norm(cop), hosr_norm(cop)); }
};

// Normalization bounds come from the observed dataset extrema.
inline Objective make_objective(double alpha, const TrainedModel& rsrp_model,
                                const TrainedModel& hosr_model, const Dataset& ds) {
  if (ds.rows.empty()) throw std::invalid_argument("objective: empty dataset");
  Objective obj;
  obj.alpha = alpha;
  obj.rsrp_model = &rsrp_model;
  obj.hosr_model = &hosr_model;
  obj.rsrp_min = obj.rsrp_max = ds.rows.front().kpi.mean_rsrp_dbm;
  obj.hosr_min = obj.hosr_max = ds.rows.front().kpi.hosr_pct;
  for (const DatasetRow& r : ds.rows) {
    obj.rsrp_min = std::min(obj.rsrp_min, r.kpi.mean_rsrp_dbm);
    obj.rsrp_max = std::max(obj.rsrp_max, r.kpi.mean_rsrp_dbm);
    obj.hosr_min = std::min(obj.hosr_min, r.kpi.hosr_pct);
    obj.hosr_max = std::max(obj.hosr_max, r.kpi.hosr_pct);
  }
  obj.validate();
  return obj;
}

struct GaConfig {
  int population = 20;
  int generations = 5;
  int tournament = 3;
  double crossover_rate = 0.9;
  double mutation_rate = 0.1;  // per gene
  int elitism = 2;
  std::uint64_t seed = 1;
  int eval_budget_cap = 100;

  void validate() const {
    if (population < 2 || generations < 1)
      throw std::invalid_argument("ga: population >= 2 and generations >= 1 required");
    if (tournament < 1 || tournament > population)
      throw std::invalid_argument("ga: tournament size must be in [1, population]");
    if (elitism < 0 || elitism >= population)
      throw std::invalid_argument("ga: elitism must be in [0, population)");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0) ||
        !(mutation_rate >= 0.0 && mutation_rate <= 1.0))
      throw std::invalid_argument("ga: rates must be in [0,1]");
    if (population * generations > eval_budget_cap)
      throw std::invalid_argument("ga: population*generations exceeds the evaluation budget cap");
  }
};

// Feasible gene ranges: TTT index into the discrete set, integer thresholds.
struct CopBox {
  std::vector<int> ttt_values = {64, 128, 256, 320, 512};
  int th1_min = -120, th1_max = -90;
  int th2_min = -120, th2_max = -90;

  static CopBox from_spec(const SweepSpec& spec) {
    return {spec.ttt_values, spec.th1_range.min_dbm, spec.th1_range.max_dbm,
            spec.th2_range.min_dbm, spec.th2_range.max_dbm};
  }
};

struct OptResult {
  std::string method;
  CopVector best;
  double objective = 0.0;
  double pred_mean_rsrp_dbm = 0.0;
  double pred_hosr_pct = 0.0;
  long evaluations = 0;  // distinct objective calls
  std::vector<double> generation_best;
};

// Exact argmax over the grid; ties go to the lexicographically smallest COP
// (the grid is iterated in lexicographic order and only strict improvements
// replace the incumbent).
inline OptResult brute_force(const std::vector<CopVector>& grid,
                             const std::function<double(const CopVector&)>& f) {
  if (grid.empty()) throw std::invalid_argument("brute_force: empty grid");
  OptResult res;
  res.method = "brute";
  res.best = grid.front();
  res.objective = f(grid.front());
  for (size_t i = 1; i < grid.size(); ++i) {
    const double v = f(grid[i]);
    if (v > res.objective) {
      res.objective = v;
      res.best = grid[i];
    }
  }
  res.evaluations = static_cast<long>(grid.size());
  res.generation_best = {res.objective};
  return res;
}

namespace detail {

struct Genome {
  int ttt_idx = 0;
  int th1 = 0;
  int th2 = 0;
  auto operator<=>(const Genome&) const = default;
};

// Reflect v into [lo, hi]; mutation deltas are bounded by half the span so
// one reflection suffices.
inline int reflect_into(int v, int lo, int hi) {
  if (v < lo) v = lo + (lo - v);
  if (v > hi) v = hi - (v - hi);
  return std::clamp(v, lo, hi);
}

}  // namespace detail

inline OptResult ga_optimize(const std::function<double(const CopVector&)>& f, const CopBox& box,
                             const GaConfig& cfg) {
  cfg.validate();
  if (box.ttt_values.empty()) throw std::invalid_argument("ga: empty ttt value set");
  if (box.th1_max < box.th1_min || box.th2_max < box.th2_min)
    throw std::invalid_argument("ga: empty threshold box");

  Rng rng(derive_stream(cfg.seed, 0x6A0ull));
  const int ttt_hi = static_cast<int>(box.ttt_values.size()) - 1;

  auto to_cop = [&](const detail::Genome& g) {
    return CopVector{box.ttt_values[g.ttt_idx], static_cast<double>(g.th1),
                     static_cast<double>(g.th2)};
  };

  std::map<std::tuple<int, int, int>, double> memo;
  long calls = 0;
  auto fitness = [&](const detail::Genome& g) {
    const auto key = std::make_tuple(g.ttt_idx, g.th1, g.th2);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const double v = f(to_cop(g));
    ++calls;
    memo.emplace(key, v);
    return v;
  };

  auto mutate_gene = [&](int v, int lo, int hi) {
    const int span = hi - lo;
    if (span == 0) return v;
    const int mag = 1 + rng.next_int(0, std::max(0, span / 8 - 1));
    const int delta = rng.next_double() < 0.5 ? -mag : mag;
    return detail::reflect_into(v + delta, lo, hi);
  };

  std::vector<detail::Genome> pop(cfg.population);
  for (detail::Genome& g : pop) {
    g.ttt_idx = rng.next_int(0, ttt_hi);
    g.th1 = rng.next_int(box.th1_min, box.th1_max);
    g.th2 = rng.next_int(box.th2_min, box.th2_max);
  }

  OptResult res;
  res.method = "ga";
  std::vector<double> fit(cfg.population);
  std::vector<int> order(cfg.population);

  for (int gen = 0; gen < cfg.generations; ++gen) {
    for (int i = 0; i < cfg.population; ++i) fit[i] = fitness(pop[i]);
    for (int i = 0; i < cfg.population; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (fit[a] != fit[b]) return fit[a] > fit[b];
      return pop[a] < pop[b];
    });
    const int best = order.front();
    if (res.generation_best.empty() || fit[best] > res.objective) {
      res.objective = fit[best];
      res.best = to_cop(pop[best]);
    }
    res.generation_best.push_back(res.objective);
    if (gen + 1 == cfg.generations) break;

    auto tournament = [&]() -> const detail::Genome& {
      int winner = rng.next_int(0, cfg.population - 1);
      for (int k = 1; k < cfg.tournament; ++k) {
        const int challenger = rng.next_int(0, cfg.population - 1);
        if (fit[challenger] > fit[winner] ||
            (fit[challenger] == fit[winner] && pop[challenger] < pop[winner]))
          winner = challenger;
      }
      return pop[winner];
    };

    std::vector<detail::Genome> next;
    next.reserve(cfg.population);
    for (int e = 0; e < cfg.elitism; ++e) next.push_back(pop[order[e]]);
    while (static_cast<int>(next.size()) < cfg.population) {
      const detail::Genome& pa = tournament();
      const detail::Genome& pb = tournament();
      detail::Genome child = pa;
      if (rng.next_double() < cfg.crossover_rate) {
        if (rng.next_double() < 0.5) child.ttt_idx = pb.ttt_idx;
        if (rng.next_double() < 0.5) child.th1 = pb.th1;
        if (rng.next_double() < 0.5) child.th2 = pb.th2;
      }
      if (rng.next_double() < cfg.mutation_rate) child.ttt_idx = mutate_gene(child.ttt_idx, 0, ttt_hi);
      if (rng.next_double() < cfg.mutation_rate)
        child.th1 = mutate_gene(child.th1, box.th1_min, box.th1_max);
      if (rng.next_double() < cfg.mutation_rate)
        child.th2 = mutate_gene(child.th2, box.th2_min, box.th2_max);
      next.push_back(child);
    }
    pop = std::move(next);
  }
  res.evaluations = calls;
  return res;
}

// ---------------------------------------------------------------------------
// Result artifacts
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const OptResult& r) {
  return {{"method", r.method},
          {"best",
           {{"ttt_ms", r.best.ttt_ms},
            {"th1_dbm", r.best.th1_dbm},
            {"th2_dbm", r.best.th2_dbm}}},
          {"objective", r.objective},
          {"predicted_mean_rsrp_dbm", r.pred_mean_rsrp_dbm},
          {"predicted_hosr_pct", r.pred_hosr_pct},
          {"evaluations", r.evaluations},
          {"generation_best", r.generation_best}};
}

inline void write_opt_result(const std::string& path, const OptResult& r,
                             const std::string& fingerprint, double alpha,
                             std::uint64_t seed) {
  nlohmann::json j = to_json(r);
  j["scenario_fingerprint"] = fingerprint;
  j["alpha"] = alpha;
  j["seed"] = seed;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write optimization result: " + path);
  out << j.dump(2) << '\n';
}

inline constexpr const char* kComparisonCsvHeader =
    "method,objective,mean_rsrp_dbm,hosr_pct,evaluations";

inline void append_comparison_csv(const std::string& path, const OptResult& r) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot append to comparison CSV: " + path);
  if (fresh) out << kComparisonCsvHeader << '\n';
  out << r.method << ',' << fmt_fixed(r.objective, 6) << ',' << fmt_fixed(r.pred_mean_rsrp_dbm, 6)
      << ',' << fmt_fixed(r.pred_hosr_pct, 6) << ',' << r.evaluations << '\n';
}

}  // namespace a5opt
