// End-to-end tests of the a5opt binary: exit codes, artifact shapes and
// byte-level idempotency, all on a seconds-scale configuration.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "a5opt/sweep.hpp"
#include "a5opt/text.hpp"

using namespace a5opt;
namespace fs = std::filesystem;

namespace {

const std::string kCli = A5OPT_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string run_capture(const std::string& args, const std::string& log) {
  const std::string cmd = kCli + " " + args + " >" + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  std::ifstream in(log);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

size_t count_lines(const std::string& text) {
  size_t n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

struct Workspace {
  fs::path root;
  std::string config;

  Workspace() {
    root = fs::temp_directory_path() / "a5opt_cli_ws";
    fs::remove_all(root);
    fs::create_directories(root);
    config = (root / "config.json").string();
    std::ofstream out(config);
    out << R"({
      "sweep": {
        "ttt_values": [64, 128],
        "th1_range": {"min": -110, "max": -100, "step": 10},
        "th2_range": {"min": -110, "max": -100, "step": 10},
        "seeds": [1, 2],
        "duration_s": 4,
        "step_ms": 32,
        "warmup_s": 1
      }
    })";
  }

  std::string dir(const std::string& name) const {
    const fs::path p = root / name;
    fs::create_directories(p);
    return p.string();
  }
};

}  // namespace

TEST_CASE("cli pipeline end to end") {
  Workspace ws;
  const std::string data = ws.dir("data");
  const std::string models = ws.dir("models");
  const std::string opt = ws.dir("opt");
  const std::string rep = ws.dir("rep");

  SUBCASE("sweep writes one row per grid point and seed") {
    CHECK(run("sweep --config " + ws.config + " --out " + data + " --parallelism 2") == 0);
    const auto rows = read_dataset_csv(data + "/dataset.csv");
    CHECK(rows.size() == 2u * 2u * 2u * 2u);  // 8 COPs x 2 seeds
    CHECK(fs::exists(data + "/dataset.csv.manifest.json"));
    CHECK(fs::exists(data + "/manifest_sweep.json"));

    SUBCASE("resume on a complete dataset executes nothing") {
      const std::string before = read_file(data + "/dataset.csv");
      const std::string out =
          run_capture("sweep --config " + ws.config + " --out " + data + " --resume",
                      (ws.root / "resume.log").string());
      CHECK(out.find("0 executed") != std::string::npos);
      CHECK(read_file(data + "/dataset.csv") == before);
    }

    SUBCASE("train writes ten models plus the eval report") {
      CHECK(run("train --dataset " + data + " --out " + models + " --seed 1") == 0);
      size_t model_files = 0;
      for (const auto& e : fs::directory_iterator(models))
        if (e.path().filename().string().rfind("model_", 0) == 0) ++model_files;
      CHECK(model_files == 10);  // 5 kinds x 2 KPIs
      CHECK(fs::exists(models + "/eval_report.csv"));

      SUBCASE("sensitivity emits the documented CSV header") {
        const std::string sens = ws.dir("sens");
        CHECK(run("sensitivity --models " + models + " --dataset " + data + " --out " + sens +
                  " --n-base 256") == 0);
        const std::string csv = read_file(sens + "/sobol.csv");
        CHECK(csv.rfind("kpi,input,first_order,first_order_se,total_order,total_order_se\n", 0) ==
              0);
        CHECK(count_lines(csv) == 1 + 6);  // header + 2 KPIs x 3 inputs
      }

      SUBCASE("optimize both methods appends two comparison rows") {
        CHECK(run("optimize --models " + models + " --dataset " + data + " --out " + opt +
                  " --method both --alpha 0.5 --seed 1") == 0);
        CHECK(fs::exists(opt + "/optresult_ga.json"));
        CHECK(fs::exists(opt + "/optresult_brute.json"));
        const std::string comparison = read_file(opt + "/comparison.csv");
        CHECK(comparison.rfind("method,objective,mean_rsrp_dbm,hosr_pct,evaluations\n", 0) == 0);
        CHECK(count_lines(comparison) == 3);  // header + brute + ga

        SUBCASE("optimize is byte-idempotent") {
          const std::string ga1 = read_file(opt + "/optresult_ga.json");
          const std::string cmp1 = read_file(opt + "/comparison.csv");
          CHECK(run("optimize --models " + models + " --dataset " + data + " --out " + opt +
                    " --method both --alpha 0.5 --seed 1") == 0);
          CHECK(read_file(opt + "/optresult_ga.json") == ga1);
          CHECK(read_file(opt + "/comparison.csv") == cmp1);
        }
      }

      SUBCASE("fingerprint mismatch between dataset and models exits 2") {
        // Re-sweep into a second directory with a different scenario.
        const std::string other = ws.dir("other");
        std::ofstream cfg(ws.root / "other.json");
        cfg << R"({"network": {"tx_power_dbm": 33},
                   "sweep": {"ttt_values": [64], "seeds": [1],
                             "th1_range": {"min": -110, "max": -100, "step": 10},
                             "th2_range": {"min": -110, "max": -100, "step": 10},
                             "duration_s": 4, "step_ms": 32, "warmup_s": 1}})";
        cfg.close();
        CHECK(run("sweep --config " + (ws.root / "other.json").string() + " --out " + other) == 0);
        CHECK(run("optimize --models " + models + " --dataset " + other + " --out " + opt) == 2);
        CHECK(run("sensitivity --models " + models + " --dataset " + other + " --out " + opt) ==
              2);
      }

      SUBCASE("report emits csv+svg per ttt and validates flags") {
        CHECK(run("report --dataset " + data + " --kpi hosr --ttt 64 --out " + rep) == 0);
        CHECK(fs::exists(rep + "/heatmap_hosr_ttt64.csv"));
        CHECK(fs::exists(rep + "/heatmap_hosr_ttt64.svg"));

        CHECK(run("report --dataset " + data + " --kpi mean_rsrp --ttt all --out " + rep) == 0);
        CHECK(fs::exists(rep + "/heatmap_mean_rsrp_ttt64.csv"));
        CHECK(fs::exists(rep + "/heatmap_mean_rsrp_ttt128.svg"));

        CHECK(run("report --dataset " + data + " --kpi objective --ttt 64 --models " + models +
                  " --out " + rep) == 0);
        CHECK(fs::exists(rep + "/heatmap_objective_ttt64.csv"));

        CHECK(run("report --dataset " + data + " --kpi nonsense --ttt 64 --out " + rep) == 2);
        CHECK(run("report --dataset " + data + " --kpi hosr --ttt 96 --out " + rep) == 2);

        // Lookup identity: a heatmap cell equals the dataset mean for its COP.
        const auto rows = read_dataset_csv(data + "/dataset.csv");
        double sum = 0.0;
        int n = 0;
        for (const auto& r : rows)
          if (r.cop == CopVector{64, -110.0, -100.0}) {
            sum += r.kpi.hosr_pct;
            ++n;
          }
        REQUIRE(n == 2);
        std::ifstream hm(rep + "/heatmap_hosr_ttt64.csv");
        std::string line;
        std::getline(hm, line);  // header
        std::getline(hm, line);  // th1 = -110 row
        const auto fields = split_csv_line(line);
        REQUIRE(fields.size() == 3);  // th1, th2=-110, th2=-100
        CHECK(parse_double(fields[2], "cell") == doctest::Approx(sum / n).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("cli error paths") {
  Workspace ws;
  const std::string out = ws.dir("out");

  SUBCASE("missing config file exits 2") {
    CHECK(run("sweep --config /nonexistent/config.json --out " + out) == 2);
  }

  SUBCASE("malformed JSON exits 2 and writes no CSV") {
    const std::string bad = (ws.root / "bad.json").string();
    std::ofstream f(bad);
    f << "{ this is not json";
    f.close();
    CHECK(run("sweep --config " + bad + " --out " + out) == 2);
    CHECK_FALSE(fs::exists(out + "/dataset.csv"));
  }

  SUBCASE("config violating invariants exits 2") {
    const std::string bad = (ws.root / "invalid.json").string();
    std::ofstream f(bad);
    f << R"({"network": {"n_macro_sites": 0}})";
    f.close();
    CHECK(run("sweep --config " + bad + " --out " + out) == 2);
  }

  SUBCASE("missing dataset exits 2") {
    CHECK(run("train --dataset /nonexistent --out " + out) == 2);
  }

  SUBCASE("unknown subcommand and missing required options exit 2") {
    CHECK(run("frobnicate") == 2);
    CHECK(run("train") == 2);
  }
}
