#pragma once

// Variance-based sensitivity analysis: Saltelli sample matrices and the
// first-order / total-order Sobol index estimators (Saltelli 2010 form for
// S_i, Jansen form for S_Ti), with moment-based standard errors. All
// evaluations are centered on the sample mean first, which makes the
// estimates exactly invariant under affine rescaling of f on a fixed
// sample set.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "a5opt/rng.hpp"
#include "a5opt/surrogate.hpp"
#include "a5opt/text.hpp"

namespace a5opt {

// One input dimension: either a continuous interval or a discrete value
// set reached by equal-width binning of the unit interval.
struct SobolDim {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> values;  // non-empty -> discrete

  static SobolDim continuous(double lo, double hi) { return {lo, hi, {}}; }
  static SobolDim discrete(std::vector<double> v) { return {0.0, 1.0, std::move(v)}; }

  double map(double u) const {
    if (values.empty()) return lo + u * (hi - lo);
    size_t k = static_cast<size_t>(u * static_cast<double>(values.size()));
    if (k >= values.size()) k = values.size() - 1;
    return values[k];
  }
};

struct SobolConfig {
  size_t n_base = 4096;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_base < 64 || (n_base & (n_base - 1)) != 0)
      throw std::invalid_argument("sobol: n_base must be a power of two >= 64");
  }
};

// Evaluation blocks A, B and the d cross matrices A_B(i) (column i of A
// replaced by B's), n*(d+2) points in total.
struct SaltelliSample {
  size_t n = 0;
  size_t d = 0;
  std::vector<std::vector<double>> a;
  std::vector<std::vector<double>> b;
  std::vector<std::vector<std::vector<double>>> ab;  // [i][row][dim]

  size_t total_rows() const { return n * (d + 2); }
};

inline SaltelliSample saltelli_matrices(const std::vector<SobolDim>& dims,
                                        const SobolConfig& cfg) {
  cfg.validate();
  if (dims.empty()) throw std::invalid_argument("sobol: need at least one dimension");
  SaltelliSample s;
  s.n = cfg.n_base;
  s.d = dims.size();
  Rng rng(derive_stream(cfg.seed, 0x50B01ull));
  auto draw = [&](std::vector<std::vector<double>>& m) {
    m.assign(s.n, std::vector<double>(s.d));
    for (size_t r = 0; r < s.n; ++r)
      for (size_t k = 0; k < s.d; ++k) m[r][k] = dims[k].map(rng.next_double());
  };
  draw(s.a);
  draw(s.b);
  s.ab.resize(s.d);
  for (size_t i = 0; i < s.d; ++i) {
    s.ab[i] = s.a;
    for (size_t r = 0; r < s.n; ++r) s.ab[i][r][i] = s.b[r][i];
  }
  return s;
}

struct SobolIndex {
  double first_order = 0.0;
  double first_order_se = 0.0;
  double total_order = 0.0;
  double total_order_se = 0.0;
};

struct SobolIndices {
  std::vector<SobolIndex> per_input;
  bool zero_variance = false;
};

inline SobolIndices sobol_indices(const std::function<double(std::span<const double>)>& f,
                                  const std::vector<SobolDim>& dims, const SobolConfig& cfg) {
  const SaltelliSample s = saltelli_matrices(dims, cfg);
  const size_t n = s.n, d = s.d;

  auto eval_block = [&](const std::vector<std::vector<double>>& m) {
    std::vector<double> out(n);
    for (size_t r = 0; r < n; ++r) out[r] = f(std::span<const double>(m[r]));
    return out;
  };
  std::vector<double> fa = eval_block(s.a);
  std::vector<double> fb = eval_block(s.b);
  std::vector<std::vector<double>> fab(d);
  for (size_t i = 0; i < d; ++i) fab[i] = eval_block(s.ab[i]);

  double f0 = 0.0;
  for (size_t r = 0; r < n; ++r) f0 += fa[r] + fb[r];
  f0 /= static_cast<double>(2 * n);
  for (size_t r = 0; r < n; ++r) {
    fa[r] -= f0;
    fb[r] -= f0;
  }
  for (size_t i = 0; i < d; ++i)
    for (size_t r = 0; r < n; ++r) fab[i][r] -= f0;

  double variance = 0.0;
  for (size_t r = 0; r < n; ++r) variance += fa[r] * fa[r] + fb[r] * fb[r];
  variance /= static_cast<double>(2 * n);

  SobolIndices out;
  out.per_input.resize(d);
  if (variance < 1e-30) {
    out.zero_variance = true;
    return out;
  }

  std::vector<double> terms(n);
  auto mean_and_se = [&](double& mean, double& se) {
    double m = 0.0;
    for (double t : terms) m += t;
    m /= static_cast<double>(n);
    double var = 0.0;
    for (double t : terms) var += (t - m) * (t - m);
    var /= static_cast<double>(n - 1);
    mean = m;
    se = std::sqrt(var / static_cast<double>(n));
  };

  for (size_t i = 0; i < d; ++i) {
    for (size_t r = 0; r < n; ++r) terms[r] = fb[r] * (fab[i][r] - fa[r]) / variance;
    mean_and_se(out.per_input[i].first_order, out.per_input[i].first_order_se);
    for (size_t r = 0; r < n; ++r) {
      const double diff = fa[r] - fab[i][r];
      terms[r] = diff * diff / (2.0 * variance);
    }
    mean_and_se(out.per_input[i].total_order, out.per_input[i].total_order_se);
  }
  return out;
}

// COP-space adapter: TTT is a discrete dimension over the sweep's values,
// the two thresholds are continuous over their ranges.
inline std::vector<SobolDim> cop_sobol_dims(const SweepSpec& spec) {
  std::vector<double> ttt(spec.ttt_values.begin(), spec.ttt_values.end());
  return {SobolDim::discrete(std::move(ttt)),
          SobolDim::continuous(spec.th1_range.min_dbm, spec.th1_range.max_dbm),
          SobolDim::continuous(spec.th2_range.min_dbm, spec.th2_range.max_dbm)};
}

inline SobolIndices sobol_for_model(const TrainedModel& model, const SweepSpec& spec,
                                    const SobolConfig& cfg) {
  auto f = [&model](std::span<const double> x) {
    return model.predict({static_cast<int>(std::llround(x[0])), x[1], x[2]});
  };
  return sobol_indices(f, cop_sobol_dims(spec), cfg);
}

inline constexpr const char* kSobolCsvHeader =
    "kpi,input,first_order,first_order_se,total_order,total_order_se";
inline constexpr std::array<const char*, 3> kCopInputNames = {"ttt_ms", "th1_dbm", "th2_dbm"};

inline void write_sobol_csv(const std::string& path,
                            const std::vector<std::pair<Kpi, SobolIndices>>& results) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write sobol CSV: " + path);
  out << kSobolCsvHeader << '\n';
  for (const auto& [kpi, idx] : results) {
    for (size_t i = 0; i < idx.per_input.size(); ++i) {
      const SobolIndex& s = idx.per_input[i];
      out << kpi_name(kpi) << ',' << kCopInputNames[i] << ',' << fmt_fixed(s.first_order, 6) << ','
          << fmt_fixed(s.first_order_se, 6) << ',' << fmt_fixed(s.total_order, 6) << ','
          << fmt_fixed(s.total_order_se, 6) << '\n';
    }
  }
}

}  // namespace a5opt
