#pragma once

// Surrogate regressors mapping a CopVector to one KPI: linear and 4th-order
// polynomial ridge least squares, a CART-style regression tree, a bagged
// random forest, and squared-error gradient boosting. All models are fitted
// from scratch on standardized features and serialize to a versioned JSON
// document that reproduces predictions exactly.
//
// fit() canonicalizes the training rows (sorted by feature tuple, then
// label) before touching them, so results are invariant under row
// permutation of the input.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "a5opt/sweep.hpp"

namespace a5opt {

enum class Kpi { mean_rsrp, hosr };
enum class ModelKind { linear, poly4, decision_tree, random_forest, gbt };

inline const char* kpi_name(Kpi k) { return k == Kpi::mean_rsrp ? "mean_rsrp" : "hosr"; }

inline Kpi kpi_from_name(const std::string& s) {
  if (s == "mean_rsrp") return Kpi::mean_rsrp;
  if (s == "hosr") return Kpi::hosr;
  throw std::invalid_argument("unknown KPI: " + s);
}

inline const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::linear: return "linear";
    case ModelKind::poly4: return "poly4";
    case ModelKind::decision_tree: return "decision_tree";
    case ModelKind::random_forest: return "random_forest";
    case ModelKind::gbt: return "gbt";
  }
  return "?";
}

inline ModelKind model_kind_from_name(const std::string& s) {
  for (ModelKind k : {ModelKind::linear, ModelKind::poly4, ModelKind::decision_tree,
                      ModelKind::random_forest, ModelKind::gbt})
    if (s == model_kind_name(k)) return k;
  throw std::invalid_argument("unknown model kind: " + s);
}

inline constexpr std::array<ModelKind, 5> kAllModelKinds = {
    ModelKind::linear, ModelKind::poly4, ModelKind::decision_tree, ModelKind::random_forest,
    ModelKind::gbt};

struct ModelSpec {
  ModelKind kind = ModelKind::gbt;
  Kpi target = Kpi::mean_rsrp;
  int max_depth = 4;
  int min_leaf = 2;
  int n_trees = 200;        // random_forest
  int mtry = 2;             // random_forest: features considered per split
  int rounds = 300;         // gbt
  double learning_rate = 0.1;
  double ridge_lambda = 1e-8;  // tiny jitter for the least-squares solves
  std::uint64_t seed = 1;

  static ModelSpec make(ModelKind k, Kpi target, std::uint64_t seed = 1) {
    ModelSpec s;
    s.kind = k;
    s.target = target;
    s.seed = seed;
    switch (k) {
      case ModelKind::decision_tree:
        s.max_depth = 8;
        break;
      case ModelKind::random_forest:
        s.max_depth = 10;
        break;
      case ModelKind::gbt:
        s.max_depth = 4;
        break;
      default:
        break;
    }
    return s;
  }

  void validate() const {
    if (max_depth < 1 || min_leaf < 1 || n_trees < 1 || rounds < 1)
      throw std::invalid_argument("model: tree hyperparameters must be positive");
    if (mtry < 1 || mtry > 3) throw std::invalid_argument("model: mtry must be in [1,3]");
    if (!(learning_rate > 0.0) || learning_rate > 1.0)
      throw std::invalid_argument("model: learning_rate must be in (0,1]");
    if (ridge_lambda < 0.0) throw std::invalid_argument("model: ridge_lambda must be >= 0");
  }
};

// One aggregated training point: per-COP mean of each KPI across seeds.
struct AggregatedPoint {
  CopVector cop;
  double mean_rsrp_dbm = 0.0;
  double hosr_pct = 0.0;
};

inline double label_of(const AggregatedPoint& p, Kpi k) {
  return k == Kpi::mean_rsrp ? p.mean_rsrp_dbm : p.hosr_pct;
}

inline std::vector<AggregatedPoint> aggregate_by_cop(const Dataset& ds) {
  struct Acc {
    CopVector cop;
    double rsrp = 0, hosr = 0;
    int n = 0;
  };
  std::map<std::tuple<int, long long, long long>, Acc> acc;
  for (const DatasetRow& r : ds.rows) {
    Acc& a = acc[{r.cop.ttt_ms, std::llround(r.cop.th1_dbm), std::llround(r.cop.th2_dbm)}];
    a.cop = r.cop;
    a.rsrp += r.kpi.mean_rsrp_dbm;
    a.hosr += r.kpi.hosr_pct;
    ++a.n;
  }
  std::vector<AggregatedPoint> out;
  out.reserve(acc.size());
  for (auto& [k, a] : acc) out.push_back({a.cop, a.rsrp / a.n, a.hosr / a.n});
  return out;
}

// Seed-deterministic shuffle split over aggregated points.
inline std::pair<std::vector<AggregatedPoint>, std::vector<AggregatedPoint>> split(
    std::vector<AggregatedPoint> points, double train_fraction, std::uint64_t seed) {
  if (points.size() < 5) throw std::invalid_argument("split: need at least 5 aggregated points");
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
    throw std::invalid_argument("split: train_fraction must be in (0,1)");
  Rng rng(derive_stream(seed, 0x5817ull));
  for (size_t i = points.size() - 1; i > 0; --i) {
    const size_t j = static_cast<size_t>(rng.next_int(0, static_cast<int>(i)));
    std::swap(points[i], points[j]);
  }
  size_t n_train = static_cast<size_t>(std::floor(points.size() * train_fraction));
  n_train = std::clamp<size_t>(n_train, 1, points.size() - 1);
  std::vector<AggregatedPoint> train(points.begin(), points.begin() + n_train);
  std::vector<AggregatedPoint> test(points.begin() + n_train, points.end());
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Feature handling
// ---------------------------------------------------------------------------

inline std::array<double, 3> cop_features(const CopVector& c) {
  return {static_cast<double>(c.ttt_ms), c.th1_dbm, c.th2_dbm};
}

struct Standardizer {
  std::array<double, 3> mean{0, 0, 0};
  std::array<double, 3> std{1, 1, 1};

  static Standardizer fit(const std::vector<std::array<double, 3>>& rows) {
    Standardizer s;
    if (rows.empty()) return s;
    for (const auto& r : rows)
      for (int k = 0; k < 3; ++k) s.mean[k] += r[k];
    for (int k = 0; k < 3; ++k) s.mean[k] /= static_cast<double>(rows.size());
    std::array<double, 3> var{0, 0, 0};
    for (const auto& r : rows)
      for (int k = 0; k < 3; ++k) var[k] += (r[k] - s.mean[k]) * (r[k] - s.mean[k]);
    for (int k = 0; k < 3; ++k) {
      var[k] /= static_cast<double>(rows.size());
      s.std[k] = var[k] > 0.0 ? std::sqrt(var[k]) : 1.0;
    }
    return s;
  }

  std::array<double, 3> apply(const std::array<double, 3>& r) const {
    return {(r[0] - mean[0]) / std[0], (r[1] - mean[1]) / std[1], (r[2] - mean[2]) / std[2]};
  }
};

// ---------------------------------------------------------------------------
// Regression trees
// ---------------------------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const std::array<double, 3>& x) const {
    int i = 0;
    while (nodes[i].feature >= 0)
      i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
  }
};

namespace detail {

struct TreeBuilder {
  const std::vector<std::array<double, 3>>& X;
  const std::vector<double>& y;
  int max_depth;
  int min_leaf;
  int mtry;  // 0 -> all features
  Rng* rng;
  std::vector<TreeNode> nodes;

  int build(std::vector<int>& idx, int depth) {
    const int me = static_cast<int>(nodes.size());
    nodes.push_back({});
    const int n = static_cast<int>(idx.size());
    double sum = 0.0;
    for (int i : idx) sum += y[i];
    const double mean = sum / n;
    nodes[me].value = mean;
    if (depth >= max_depth || n < 2 * min_leaf) return me;

    std::array<int, 3> feats = {0, 1, 2};
    int n_feats = 3;
    if (rng != nullptr && mtry > 0 && mtry < 3) {
      for (int i = 0; i < mtry; ++i) {
        const int j = rng->next_int(i, 2);
        std::swap(feats[i], feats[j]);
      }
      n_feats = mtry;
      std::sort(feats.begin(), feats.begin() + n_feats);
    }

    const double base_score = sum * sum / n;
    double best_score = base_score + 1e-12 * (1.0 + std::abs(base_score));
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<int> order(idx);
    for (int fi = 0; fi < n_feats; ++fi) {
      const int f = feats[fi];
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (X[a][f] != X[b][f]) return X[a][f] < X[b][f];
        return a < b;
      });
      double left_sum = 0.0;
      for (int i = 0; i + 1 < n; ++i) {
        left_sum += y[order[i]];
        const int ln = i + 1;
        const int rn = n - ln;
        if (ln < min_leaf || rn < min_leaf) continue;
        if (X[order[i]][f] == X[order[i + 1]][f]) continue;
        const double right_sum = sum - left_sum;
        const double score = left_sum * left_sum / ln + right_sum * right_sum / rn;
        if (score > best_score) {
          best_score = score;
          best_feature = f;
          best_threshold = 0.5 * (X[order[i]][f] + X[order[i + 1]][f]);
        }
      }
    }
    if (best_feature < 0) return me;

    std::vector<int> left_idx, right_idx;
    left_idx.reserve(idx.size());
    right_idx.reserve(idx.size());
    for (int i : idx)
      (X[i][best_feature] <= best_threshold ? left_idx : right_idx).push_back(i);
    if (left_idx.empty() || right_idx.empty()) return me;  // degenerate midpoint rounding

    nodes[me].feature = best_feature;
    nodes[me].threshold = best_threshold;
    const int l = build(left_idx, depth + 1);
    const int r = build(right_idx, depth + 1);
    nodes[me].left = l;
    nodes[me].right = r;
    return me;
  }
};

inline RegressionTree fit_tree(const std::vector<std::array<double, 3>>& X,
                               const std::vector<double>& y, std::vector<int> idx, int max_depth,
                               int min_leaf, int mtry, Rng* rng) {
  TreeBuilder b{X, y, max_depth, min_leaf, mtry, rng, {}};
  b.build(idx, 0);
  RegressionTree t;
  t.nodes = std::move(b.nodes);
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Polynomial basis + ridge least squares
// ---------------------------------------------------------------------------

// Monomial exponents up to the given total degree, ordered by degree then
// lexicographically with x1 first: 1, x1, x2, x3, x1^2, x1*x2, ...
inline std::vector<std::array<int, 3>> poly_basis(int max_degree) {
  std::vector<std::array<int, 3>> basis;
  for (int d = 0; d <= max_degree; ++d)
    for (int e1 = d; e1 >= 0; --e1)
      for (int e2 = d - e1; e2 >= 0; --e2) basis.push_back({e1, e2, d - e1 - e2});
  return basis;
}

inline double eval_monomial(const std::array<int, 3>& exp, const std::array<double, 3>& z) {
  double v = 1.0;
  for (int k = 0; k < 3; ++k)
    for (int e = 0; e < exp[k]; ++e) v *= z[k];
  return v;
}

namespace detail {

// Solves (Phi'Phi + lambda*n*P) beta = Phi'y in place via Cholesky, where P
// penalizes everything except the intercept.
inline std::vector<double> ridge_solve(const std::vector<std::vector<double>>& phi,
                                       const std::vector<double>& y, double lambda) {
  const size_t n = phi.size();
  const size_t m = phi.front().size();
  std::vector<double> a(m * m, 0.0), b(m, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t p = 0; p < m; ++p) {
      b[p] += phi[i][p] * y[i];
      for (size_t q = p; q < m; ++q) a[p * m + q] += phi[i][p] * phi[i][q];
    }
  }
  for (size_t p = 1; p < m; ++p) a[p * m + p] += lambda * static_cast<double>(n);
  for (size_t p = 0; p < m; ++p)
    for (size_t q = 0; q < p; ++q) a[p * m + q] = a[q * m + p];
  // Cholesky a = L L'
  for (size_t p = 0; p < m; ++p) {
    for (size_t q = 0; q <= p; ++q) {
      double s = a[p * m + q];
      for (size_t k = 0; k < q; ++k) s -= a[p * m + k] * a[q * m + k];
      if (p == q) {
        if (s <= 0.0) throw std::runtime_error("singular design matrix in least-squares fit");
        a[p * m + p] = std::sqrt(s);
      } else {
        a[p * m + q] = s / a[q * m + q];
      }
    }
  }
  std::vector<double> beta(m);
  for (size_t p = 0; p < m; ++p) {  // forward solve L z = b
    double s = b[p];
    for (size_t k = 0; k < p; ++k) s -= a[p * m + k] * beta[k];
    beta[p] = s / a[p * m + p];
  }
  for (size_t pi = m; pi-- > 0;) {  // back solve L' beta = z
    double s = beta[pi];
    for (size_t k = pi + 1; k < m; ++k) s -= a[k * m + pi] * beta[k];
    beta[pi] = s / a[pi * m + pi];
  }
  return beta;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Trained model
// ---------------------------------------------------------------------------

inline constexpr int kModelSchemaVersion = 1;

struct TrainedModel {
  ModelSpec spec;
  Standardizer norm;
  std::string dataset_fingerprint;
  std::array<double, 3> feature_min{0, 0, 0};  // training box, for extrapolation checks
  std::array<double, 3> feature_max{0, 0, 0};

  // linear / poly4
  std::vector<std::array<int, 3>> basis;
  std::vector<double> coefficients;
  // decision_tree
  RegressionTree tree;
  // random_forest
  std::vector<RegressionTree> forest;
  // gbt
  double gbt_base = 0.0;
  std::vector<RegressionTree> gbt_trees;
  std::vector<double> gbt_train_rmse;

  double predict(const CopVector& cop) const {
    const std::array<double, 3> z = norm.apply(cop_features(cop));
    double v = 0.0;
    switch (spec.kind) {
      case ModelKind::linear:
      case ModelKind::poly4:
        for (size_t i = 0; i < basis.size(); ++i) v += coefficients[i] * eval_monomial(basis[i], z);
        break;
      case ModelKind::decision_tree:
        v = tree.predict(z);
        break;
      case ModelKind::random_forest: {
        double s = 0.0;
        for (const RegressionTree& t : forest) s += t.predict(z);
        v = s / static_cast<double>(forest.size());
        break;
      }
      case ModelKind::gbt: {
        double s = gbt_base;
        for (const RegressionTree& t : gbt_trees) s += spec.learning_rate * t.predict(z);
        v = s;
        break;
      }
    }
    if (spec.target == Kpi::hosr) v = std::clamp(v, 0.0, 100.0);
    return v;
  }

  bool in_train_box(const CopVector& cop) const {
    const std::array<double, 3> x = cop_features(cop);
    for (int k = 0; k < 3; ++k)
      if (x[k] < feature_min[k] || x[k] > feature_max[k]) return false;
    return true;
  }
};

inline TrainedModel fit(const ModelSpec& spec, const std::vector<AggregatedPoint>& train,
                        const std::string& dataset_fingerprint = "") {
  spec.validate();
  if (train.empty()) throw std::invalid_argument("fit: empty training set");

  // Canonical row order: model output must not depend on how the caller
  // happened to order the dataset.
  std::vector<AggregatedPoint> rows(train);
  std::sort(rows.begin(), rows.end(), [&](const AggregatedPoint& a, const AggregatedPoint& b) {
    if (a.cop != b.cop) return a.cop < b.cop;
    return label_of(a, spec.target) < label_of(b, spec.target);
  });

  TrainedModel model;
  model.spec = spec;
  model.dataset_fingerprint = dataset_fingerprint;

  std::vector<std::array<double, 3>> raw;
  std::vector<double> y;
  raw.reserve(rows.size());
  y.reserve(rows.size());
  for (const AggregatedPoint& p : rows) {
    raw.push_back(cop_features(p.cop));
    y.push_back(label_of(p, spec.target));
  }
  model.feature_min = model.feature_max = raw.front();
  for (const auto& r : raw)
    for (int k = 0; k < 3; ++k) {
      model.feature_min[k] = std::min(model.feature_min[k], r[k]);
      model.feature_max[k] = std::max(model.feature_max[k], r[k]);
    }
  model.norm = Standardizer::fit(raw);
  std::vector<std::array<double, 3>> X(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) X[i] = model.norm.apply(raw[i]);

  std::vector<int> all_idx(X.size());
  for (size_t i = 0; i < X.size(); ++i) all_idx[i] = static_cast<int>(i);

  switch (spec.kind) {
    case ModelKind::linear:
    case ModelKind::poly4: {
      model.basis = poly_basis(spec.kind == ModelKind::linear ? 1 : 4);
      std::vector<std::vector<double>> phi(X.size());
      for (size_t i = 0; i < X.size(); ++i) {
        phi[i].resize(model.basis.size());
        for (size_t p = 0; p < model.basis.size(); ++p)
          phi[i][p] = eval_monomial(model.basis[p], X[i]);
      }
      model.coefficients = detail::ridge_solve(phi, y, spec.ridge_lambda);
      break;
    }
    case ModelKind::decision_tree:
      model.tree =
          detail::fit_tree(X, y, all_idx, spec.max_depth, spec.min_leaf, 0, nullptr);
      break;
    case ModelKind::random_forest: {
      model.forest.reserve(spec.n_trees);
      const int n = static_cast<int>(X.size());
      for (int t = 0; t < spec.n_trees; ++t) {
        Rng rng(derive_stream(spec.seed, 0xF0BE57ull + static_cast<std::uint64_t>(t)));
        std::vector<int> boot(n);
        for (int i = 0; i < n; ++i) boot[i] = rng.next_int(0, n - 1);
        model.forest.push_back(
            detail::fit_tree(X, y, boot, spec.max_depth, spec.min_leaf, spec.mtry, &rng));
      }
      break;
    }
    case ModelKind::gbt: {
      double base = 0.0;
      for (double v : y) base += v;
      base /= static_cast<double>(y.size());
      model.gbt_base = base;
      std::vector<double> f(y.size(), base), residual(y.size());
      model.gbt_trees.reserve(spec.rounds);
      model.gbt_train_rmse.reserve(spec.rounds);
      for (int round = 0; round < spec.rounds; ++round) {
        for (size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - f[i];
        RegressionTree t =
            detail::fit_tree(X, residual, all_idx, spec.max_depth, spec.min_leaf, 0, nullptr);
        double sse = 0.0;
        for (size_t i = 0; i < y.size(); ++i) {
          f[i] += spec.learning_rate * t.predict(X[i]);
          const double e = y[i] - f[i];
          sse += e * e;
        }
        model.gbt_trees.push_back(std::move(t));
        model.gbt_train_rmse.push_back(std::sqrt(sse / static_cast<double>(y.size())));
      }
      break;
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalRow {
  ModelKind kind;
  Kpi target;
  double rmse = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // sorted ascending by RMSE
  size_t n_train = 0;
  size_t n_test = 0;
  std::uint64_t split_seed = 0;
};

inline double test_rmse(const TrainedModel& model, const std::vector<AggregatedPoint>& test) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  double sse = 0.0;
  for (const AggregatedPoint& p : test) {
    const double e = model.predict(p.cop) - label_of(p, model.spec.target);
    sse += e * e;
  }
  return std::sqrt(sse / static_cast<double>(test.size()));
}

inline EvalReport evaluate(const std::vector<TrainedModel>& models,
                           const std::vector<AggregatedPoint>& test) {
  EvalReport report;
  report.n_test = test.size();
  for (const TrainedModel& m : models) report.rows.push_back({m.spec.kind, m.spec.target,
                                                              test_rmse(m, test)});
  std::sort(report.rows.begin(), report.rows.end(), [](const EvalRow& a, const EvalRow& b) {
    if (a.rmse != b.rmse) return a.rmse < b.rmse;
    if (a.target != b.target) return a.target < b.target;
    return a.kind < b.kind;
  });
  return report;
}

inline void write_eval_report_csv(const std::string& path, const EvalReport& r) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write eval report: " + path);
  out << "model,kpi,test_rmse,n_train,n_test,split_seed\n";
  for (const EvalRow& row : r.rows)
    out << model_kind_name(row.kind) << ',' << kpi_name(row.target) << ','
        << fmt_fixed(row.rmse, 6) << ',' << r.n_train << ',' << r.n_test << ',' << r.split_seed
        << '\n';
}

inline std::string format_eval_table(const EvalReport& r) {
  std::string s;
  s += "model           kpi        test_rmse\n";
  for (const EvalRow& row : r.rows) {
    char line[96];
    std::snprintf(line, sizeof(line), "%-15s %-10s %10.4f\n", model_kind_name(row.kind),
                  kpi_name(row.target), row.rmse);
    s += line;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Model JSON serialization
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json tree_to_json(const RegressionTree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& n : t.nodes)
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
  return nodes;
}

inline RegressionTree tree_from_json(const nlohmann::json& j) {
  RegressionTree t;
  for (const auto& n : j) {
    if (!n.is_array() || n.size() != 5) throw std::invalid_argument("bad tree node in model JSON");
    t.nodes.push_back({n[0].get<int>(), n[1].get<double>(), n[2].get<int>(), n[3].get<int>(),
                       n[4].get<double>()});
  }
  if (t.nodes.empty()) throw std::invalid_argument("empty tree in model JSON");
  return t;
}

}  // namespace detail

inline nlohmann::json to_json(const TrainedModel& m) {
  nlohmann::json j = {
      {"schema_version", kModelSchemaVersion},
      {"kind", model_kind_name(m.spec.kind)},
      {"target", kpi_name(m.spec.target)},
      {"dataset_fingerprint", m.dataset_fingerprint},
      {"normalization", {{"mean", m.norm.mean}, {"std", m.norm.std}}},
      {"train_box", {{"min", m.feature_min}, {"max", m.feature_max}}},
      {"hyperparameters",
       {{"max_depth", m.spec.max_depth},
        {"min_leaf", m.spec.min_leaf},
        {"n_trees", m.spec.n_trees},
        {"mtry", m.spec.mtry},
        {"rounds", m.spec.rounds},
        {"learning_rate", m.spec.learning_rate},
        {"ridge_lambda", m.spec.ridge_lambda},
        {"seed", m.spec.seed}}}};
  nlohmann::json payload;
  switch (m.spec.kind) {
    case ModelKind::linear:
    case ModelKind::poly4:
      payload["basis"] = m.basis;
      payload["coefficients"] = m.coefficients;
      break;
    case ModelKind::decision_tree:
      payload["nodes"] = detail::tree_to_json(m.tree);
      break;
    case ModelKind::random_forest: {
      nlohmann::json trees = nlohmann::json::array();
      for (const RegressionTree& t : m.forest) trees.push_back(detail::tree_to_json(t));
      payload["trees"] = trees;
      break;
    }
    case ModelKind::gbt: {
      payload["base"] = m.gbt_base;
      nlohmann::json trees = nlohmann::json::array();
      for (const RegressionTree& t : m.gbt_trees) trees.push_back(detail::tree_to_json(t));
      payload["trees"] = trees;
      payload["train_rmse"] = m.gbt_train_rmse;
      break;
    }
  }
  j["payload"] = payload;
  return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  TrainedModel m;
  try {
    if (j.at("schema_version").get<int>() != kModelSchemaVersion)
      throw std::invalid_argument("unsupported model schema version");
    m.spec.kind = model_kind_from_name(j.at("kind").get<std::string>());
    m.spec.target = kpi_from_name(j.at("target").get<std::string>());
    m.dataset_fingerprint = j.value("dataset_fingerprint", "");
    const nlohmann::json& norm = j.at("normalization");
    m.norm.mean = norm.at("mean").get<std::array<double, 3>>();
    m.norm.std = norm.at("std").get<std::array<double, 3>>();
    const nlohmann::json& box = j.at("train_box");
    m.feature_min = box.at("min").get<std::array<double, 3>>();
    m.feature_max = box.at("max").get<std::array<double, 3>>();
    const nlohmann::json& h = j.at("hyperparameters");
    m.spec.max_depth = h.at("max_depth").get<int>();
    m.spec.min_leaf = h.at("min_leaf").get<int>();
    m.spec.n_trees = h.at("n_trees").get<int>();
    m.spec.mtry = h.at("mtry").get<int>();
    m.spec.rounds = h.at("rounds").get<int>();
    m.spec.learning_rate = h.at("learning_rate").get<double>();
    m.spec.ridge_lambda = h.at("ridge_lambda").get<double>();
    m.spec.seed = h.at("seed").get<std::uint64_t>();
    const nlohmann::json& p = j.at("payload");
    switch (m.spec.kind) {
      case ModelKind::linear:
      case ModelKind::poly4:
        m.basis = p.at("basis").get<std::vector<std::array<int, 3>>>();
        m.coefficients = p.at("coefficients").get<std::vector<double>>();
        if (m.basis.size() != m.coefficients.size())
          throw std::invalid_argument("basis/coefficient size mismatch");
        break;
      case ModelKind::decision_tree:
        m.tree = detail::tree_from_json(p.at("nodes"));
        break;
      case ModelKind::random_forest:
        for (const auto& t : p.at("trees")) m.forest.push_back(detail::tree_from_json(t));
        if (m.forest.empty()) throw std::invalid_argument("empty forest in model JSON");
        break;
      case ModelKind::gbt:
        m.gbt_base = p.at("base").get<double>();
        for (const auto& t : p.at("trees")) m.gbt_trees.push_back(detail::tree_from_json(t));
        m.gbt_train_rmse = p.at("train_rmse").get<std::vector<double>>();
        break;
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed model JSON: ") + e.what());
  }
  return m;
}

inline std::string model_filename(ModelKind kind, Kpi target) {
  return std::string("model_") + model_kind_name(kind) + "_" + kpi_name(target) + ".json";
}

inline void save_model(const std::string& path, const TrainedModel& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << to_json(m).dump(2) << '\n';
}

inline TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed model JSON in " + path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace a5opt
