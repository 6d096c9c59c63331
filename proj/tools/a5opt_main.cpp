// a5opt: inter-frequency handover parameter study pipeline.
//
// Subcommands: sweep (simulate the COP grid into a labeled dataset), train
// (fit surrogate models per KPI), sensitivity (Sobol indices of the
// surrogates), optimize (GA vs brute force on the surrogate objective) and
// report (per-TTT heatmap CSV/SVG artifacts).
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "a5opt/a5opt.hpp"

namespace fs = std::filesystem;
using namespace a5opt;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 1;
  std::string config_path;
  std::string out_dir = ".";
};

int resolve_parallelism(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("A5OPT_PARALLELISM")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 0;  // library default: hardware concurrency
}

void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const std::vector<std::string>& inputs,
                        const std::vector<std::string>& outputs, const std::string& fingerprint,
                        std::uint64_t seed, double wall_s, int parallelism = 0) {
  for (const std::string& p : outputs)
    if (!fs::exists(p)) throw std::runtime_error("declared output missing: " + p);
  nlohmann::json j = {{"command", command},
                      {"tool_version", kToolVersion},
                      {"inputs", inputs},
                      {"outputs", outputs},
                      {"scenario_fingerprint", fingerprint},
                      {"seed", seed},
                      {"wall_s", wall_s}};
  if (parallelism > 0) j["parallelism"] = parallelism;
  const std::string path = out_dir + "/manifest_" + command + ".json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write run manifest: " + path);
  out << j.dump(2) << '\n';
}

std::string dataset_csv_path(const std::string& dataset_arg) {
  if (fs::is_directory(dataset_arg)) return dataset_arg + "/dataset.csv";
  return dataset_arg;
}

void require_input(const std::string& path, const char* what) {
  if (!fs::exists(path))
    throw std::invalid_argument(std::string(what) + " not found: " + path);
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

// ---------------------------------------------------------------------------

int cmd_sweep(const GlobalOpts& g, int parallelism_flag, bool resume) {
  Timer timer;
  if (g.config_path.empty()) throw std::invalid_argument("sweep requires --config");
  require_input(g.config_path, "config file");
  const ToolConfig cfg = load_tool_config(g.config_path);
  fs::create_directories(g.out_dir);
  const NetworkLayout layout = build_layout(cfg.network);

  SweepOptions opt;
  opt.parallelism = resolve_parallelism(parallelism_flag);
  opt.csv_path = g.out_dir + "/dataset.csv";
  opt.resume = resume;
  const size_t report_every =
      std::max<size_t>(1, cop_grid(cfg.sweep).size() * cfg.sweep.seeds.size() / 20);
  opt.progress = [&](size_t done, size_t total) {
    if (done % report_every == 0 || done == total)
      std::cerr << "sweep: " << done << "/" << total << " runs\n";
  };

  const SweepOutcome outcome = run_sweep(layout, cfg.mobility, cfg.event, cfg.sweep, opt);
  std::cout << "sweep complete: " << outcome.dataset.rows.size() << " rows ("
            << outcome.executed << " executed, " << outcome.skipped << " reused) -> "
            << opt.csv_path << '\n';
  write_run_manifest(g.out_dir, "sweep", {g.config_path},
                     {opt.csv_path, dataset_manifest_path(opt.csv_path)},
                     outcome.dataset.scenario_fingerprint, g.seed, timer.seconds(),
                     opt.parallelism);
  return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& dataset_arg, double train_fraction) {
  Timer timer;
  const std::string csv = dataset_csv_path(dataset_arg);
  require_input(csv, "dataset CSV");
  require_input(dataset_manifest_path(csv), "dataset manifest");
  const DatasetBundle bundle = load_dataset(csv);
  fs::create_directories(g.out_dir);

  const std::vector<AggregatedPoint> points = aggregate_by_cop(bundle.dataset);
  auto [train_set, test_set] = split(points, train_fraction, g.seed);

  std::vector<TrainedModel> models;
  std::vector<std::string> outputs;
  for (Kpi kpi : {Kpi::mean_rsrp, Kpi::hosr}) {
    for (ModelKind kind : kAllModelKinds) {
      const ModelSpec spec = ModelSpec::make(kind, kpi, g.seed);
      TrainedModel model = fit(spec, train_set, bundle.dataset.scenario_fingerprint);
      const std::string path = g.out_dir + "/" + model_filename(kind, kpi);
      save_model(path, model);
      outputs.push_back(path);
      models.push_back(std::move(model));
    }
  }

  EvalReport report = evaluate(models, test_set);
  report.n_train = train_set.size();
  report.n_test = test_set.size();
  report.split_seed = g.seed;
  const std::string report_path = g.out_dir + "/eval_report.csv";
  write_eval_report_csv(report_path, report);
  outputs.push_back(report_path);
  std::cout << format_eval_table(report);
  std::cout << "trained " << models.size() << " models on " << report.n_train << " points ("
            << report.n_test << " held out) -> " << g.out_dir << '\n';
  write_run_manifest(g.out_dir, "train", {csv}, outputs, bundle.dataset.scenario_fingerprint,
                     g.seed, timer.seconds());
  return 0;
}

// Loads one surrogate per KPI and cross-checks fingerprints against the
// dataset the pipeline stage is about to use.
std::pair<TrainedModel, TrainedModel> load_kpi_models(const std::string& models_dir,
                                                      const std::string& expected_fingerprint) {
  const std::string rsrp_path = models_dir + "/" + model_filename(ModelKind::gbt, Kpi::mean_rsrp);
  const std::string hosr_path = models_dir + "/" + model_filename(ModelKind::gbt, Kpi::hosr);
  require_input(rsrp_path, "model file");
  require_input(hosr_path, "model file");
  TrainedModel rsrp = load_model(rsrp_path);
  TrainedModel hosr = load_model(hosr_path);
  if (rsrp.dataset_fingerprint != hosr.dataset_fingerprint)
    throw std::invalid_argument("model fingerprints disagree between KPI models");
  if (!expected_fingerprint.empty() && rsrp.dataset_fingerprint != expected_fingerprint)
    throw std::invalid_argument("dataset/model fingerprint mismatch: refusing to mix scenarios (" +
                                rsrp.dataset_fingerprint + " vs " + expected_fingerprint + ")");
  return {std::move(rsrp), std::move(hosr)};
}

int cmd_sensitivity(const GlobalOpts& g, const std::string& models_dir,
                    const std::string& dataset_arg, size_t n_base) {
  Timer timer;
  const std::string csv = dataset_csv_path(dataset_arg);
  require_input(csv, "dataset CSV");
  const DatasetBundle bundle = load_dataset(csv);
  auto [rsrp_model, hosr_model] = load_kpi_models(models_dir, bundle.dataset.scenario_fingerprint);
  fs::create_directories(g.out_dir);

  SobolConfig cfg;
  cfg.n_base = n_base;
  cfg.seed = g.seed;
  std::vector<std::pair<Kpi, SobolIndices>> results;
  results.emplace_back(Kpi::mean_rsrp, sobol_for_model(rsrp_model, bundle.config.sweep, cfg));
  results.emplace_back(Kpi::hosr, sobol_for_model(hosr_model, bundle.config.sweep, cfg));

  const std::string path = g.out_dir + "/sobol.csv";
  write_sobol_csv(path, results);
  for (const auto& [kpi, idx] : results) {
    std::cout << kpi_name(kpi) << ":";
    if (idx.zero_variance) {
      std::cout << " zero output variance, indices undefined (reported as 0)";
    } else {
      for (size_t i = 0; i < idx.per_input.size(); ++i)
        std::cout << "  S(" << kCopInputNames[i] << ")=" << fmt_fixed(idx.per_input[i].first_order, 3)
                  << " ST=" << fmt_fixed(idx.per_input[i].total_order, 3);
    }
    std::cout << '\n';
  }
  std::cout << "sensitivity indices -> " << path << '\n';
  write_run_manifest(g.out_dir, "sensitivity", {csv, models_dir}, {path},
                     bundle.dataset.scenario_fingerprint, g.seed, timer.seconds());
  return 0;
}

int cmd_optimize(const GlobalOpts& g, const std::string& models_dir,
                 const std::string& dataset_arg, const std::string& method, double alpha) {
  Timer timer;
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("--alpha must be in [0,1]");
  const std::string csv = dataset_csv_path(dataset_arg);
  require_input(csv, "dataset CSV");
  const DatasetBundle bundle = load_dataset(csv);
  auto [rsrp_model, hosr_model] = load_kpi_models(models_dir, bundle.dataset.scenario_fingerprint);
  fs::create_directories(g.out_dir);

  const Objective obj = make_objective(alpha, rsrp_model, hosr_model, bundle.dataset);
  auto f = [&obj](const CopVector& cop) { return obj.value(cop); };

  // The optimizer explores the COP box at full 1 dBm resolution regardless
  // of the measurement grid's step.
  SweepSpec box_spec = bundle.config.sweep;
  box_spec.th1_range.step_db = 1;
  box_spec.th2_range.step_db = 1;

  std::vector<std::string> outputs;
  const std::string comparison_path = g.out_dir + "/comparison.csv";
  if (fs::exists(comparison_path)) fs::remove(comparison_path);  // idempotent reruns

  auto finish = [&](OptResult res) {
    res.pred_mean_rsrp_dbm = rsrp_model.predict(res.best);
    res.pred_hosr_pct = hosr_model.predict(res.best);
    const std::string path = g.out_dir + "/optresult_" + res.method + ".json";
    write_opt_result(path, res, bundle.dataset.scenario_fingerprint, alpha, g.seed);
    append_comparison_csv(comparison_path, res);
    outputs.push_back(path);
    std::cout << res.method << ": objective=" << fmt_fixed(res.objective, 4) << " at (ttt="
              << res.best.ttt_ms << ", th1=" << res.best.th1_dbm << ", th2=" << res.best.th2_dbm
              << "), rsrp=" << fmt_fixed(res.pred_mean_rsrp_dbm, 2)
              << " dBm, hosr=" << fmt_fixed(res.pred_hosr_pct, 2) << "%, evaluations="
              << res.evaluations << '\n';
  };

  if (method == "brute" || method == "both") finish(brute_force(cop_grid(box_spec), f));
  if (method == "ga" || method == "both") {
    GaConfig ga;
    ga.seed = g.seed;
    finish(ga_optimize(f, CopBox::from_spec(box_spec), ga));
  }
  outputs.push_back(comparison_path);
  write_run_manifest(g.out_dir, "optimize", {csv, models_dir}, outputs,
                     bundle.dataset.scenario_fingerprint, g.seed, timer.seconds());
  return 0;
}

int cmd_report(const GlobalOpts& g, const std::string& dataset_arg, const std::string& models_dir,
               const std::string& kpi_flag, const std::string& ttt_flag, double alpha) {
  Timer timer;
  const std::string csv = dataset_csv_path(dataset_arg);
  require_input(csv, "dataset CSV");
  const DatasetBundle bundle = load_dataset(csv);
  fs::create_directories(g.out_dir);

  std::vector<int> ttts;
  if (ttt_flag == "all") {
    ttts = bundle.config.sweep.ttt_values;
  } else {
    const int t = static_cast<int>(parse_ll(ttt_flag, "--ttt"));
    bool known = false;
    for (int v : bundle.config.sweep.ttt_values) known = known || v == t;
    if (!known) throw std::invalid_argument("--ttt value not in the sweep's TTT set: " + ttt_flag);
    ttts = {t};
  }

  TrainedModel rsrp_model, hosr_model;
  const bool have_models = !models_dir.empty();
  if (have_models) {
    std::tie(rsrp_model, hosr_model) =
        load_kpi_models(models_dir, bundle.dataset.scenario_fingerprint);
  }
  if (kpi_flag == "objective" && !have_models)
    throw std::invalid_argument("--kpi objective requires --models");

  std::vector<std::string> outputs;
  for (int ttt : ttts) {
    Heatmap h;
    if (kpi_flag == "objective") {
      const Objective obj = make_objective(alpha, rsrp_model, hosr_model, bundle.dataset);
      h = heatmap_from_objective(obj, bundle.config.sweep, ttt);
    } else {
      const Kpi kpi = kpi_from_name(kpi_flag);
      h = have_models ? heatmap_from_model(kpi == Kpi::mean_rsrp ? rsrp_model : hosr_model,
                                           bundle.config.sweep, ttt)
                      : heatmap_from_dataset(bundle.dataset, bundle.config.sweep, kpi, ttt);
    }
    const std::string stem = g.out_dir + "/heatmap_" + kpi_flag + "_ttt" + fmt_int(ttt);
    write_heatmap_csv(stem + ".csv", h);
    write_heatmap_svg(stem + ".svg", h);
    outputs.push_back(stem + ".csv");
    outputs.push_back(stem + ".svg");
  }
  std::cout << "wrote " << outputs.size() << " report files to " << g.out_dir << '\n';
  std::vector<std::string> inputs = {csv};
  if (have_models) inputs.push_back(models_dir);
  write_run_manifest(g.out_dir, "report", inputs, outputs, bundle.dataset.scenario_fingerprint,
                     g.seed, timer.seconds());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inter-frequency handover (A5) parameter sweep, surrogate modeling,"
               " sensitivity analysis and optimization toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Base random seed for train/sensitivity/optimize");
  app.add_option("--config", g.config_path, "JSON configuration file");
  app.add_option("--out", g.out_dir, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Run the COP grid sweep and write the dataset CSV");
  int parallelism = 0;
  bool resume = false;
  sweep->add_option("--parallelism", parallelism,
                    "Worker threads (default: $A5OPT_PARALLELISM or hardware)");
  sweep->add_flag("--resume", resume, "Reuse rows already present in the output CSV");
  sweep->fallthrough();

  auto* train = app.add_subcommand("train", "Fit surrogate models from a dataset");
  std::string dataset_arg;
  double train_fraction = 0.8;
  train->add_option("--dataset", dataset_arg, "Dataset directory or CSV path")->required();
  train->add_option("--train-fraction", train_fraction, "Training split fraction");
  train->fallthrough();

  auto* sens = app.add_subcommand("sensitivity", "Sobol sensitivity indices of the surrogates");
  std::string models_dir;
  std::size_t n_base = 4096;
  sens->add_option("--models", models_dir, "Directory with trained model JSONs")->required();
  sens->add_option("--dataset", dataset_arg, "Dataset directory or CSV path")->required();
  sens->add_option("--n-base", n_base, "Saltelli base sample count (power of two)");
  sens->fallthrough();

  auto* opt = app.add_subcommand("optimize", "Optimize the joint KPI objective");
  std::string method = "both";
  double alpha = 0.5;
  opt->add_option("--models", models_dir, "Directory with trained model JSONs")->required();
  opt->add_option("--dataset", dataset_arg, "Dataset directory or CSV path")->required();
  opt->add_option("--method", method, "Optimization method")
      ->check(CLI::IsMember({"ga", "brute", "both"}));
  opt->add_option("--alpha", alpha, "KPI weight: alpha*rsrp + (1-alpha)*hosr");
  opt->fallthrough();

  auto* report = app.add_subcommand("report", "Emit per-TTT heatmap CSV/SVG artifacts");
  std::string kpi_flag = "mean_rsrp";
  std::string ttt_flag = "all";
  report->add_option("--dataset", dataset_arg, "Dataset directory or CSV path")->required();
  report->add_option("--models", models_dir, "Optional model directory (predicted heatmaps)");
  report->add_option("--kpi", kpi_flag, "KPI to plot")
      ->check(CLI::IsMember({"mean_rsrp", "hosr", "objective"}));
  report->add_option("--ttt", ttt_flag, "TTT in ms, or 'all'");
  report->add_option("--alpha", alpha, "Objective weight (with --kpi objective)");
  report->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sweep->parsed()) return cmd_sweep(g, parallelism, resume);
    if (train->parsed()) return cmd_train(g, dataset_arg, train_fraction);
    if (sens->parsed()) return cmd_sensitivity(g, models_dir, dataset_arg, n_base);
    if (opt->parsed()) return cmd_optimize(g, models_dir, dataset_arg, method, alpha);
    if (report->parsed()) return cmd_report(g, dataset_arg, models_dir, kpi_flag, ttt_flag, alpha);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
