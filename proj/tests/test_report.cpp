#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "a5opt/report.hpp"

using namespace a5opt;
namespace fs = std::filesystem;

TEST_CASE("dataset heatmap cells equal the per-COP dataset means") {
  SweepSpec spec;
  spec.ttt_values = {64};
  spec.th1_range = {-110, -100, 5};
  spec.th2_range = {-110, -100, 5};
  Dataset ds;
  for (const CopVector& c : cop_grid(spec))
    for (std::uint64_t seed : {1u, 2u})
      ds.rows.push_back({c, seed, {0.1 * c.th1_dbm + 0.2 * c.th2_dbm + (seed == 1 ? -1.0 : 1.0),
                                   90.0},
                         {}});
  const Heatmap h = heatmap_from_dataset(ds, spec, Kpi::mean_rsrp, 64);
  REQUIRE(h.th1_values.size() == 3);
  REQUIRE(h.th2_values.size() == 3);
  // Seed offsets +-1 cancel in the mean.
  CHECK(h.values[1][2] == doctest::Approx(0.1 * -105 + 0.2 * -100));
  CHECK(h.values[0][0] == doctest::Approx(0.1 * -110 + 0.2 * -110));
}

TEST_CASE("heatmap writers emit well-formed CSV and SVG") {
  Heatmap h;
  h.title = "test";
  h.th1_values = {-110, -105, -100};
  h.th2_values = {-120, -115};
  h.values = {{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}};
  const fs::path dir = fs::temp_directory_path() / "a5opt_report_test";
  fs::create_directories(dir);
  const std::string csv = (dir / "h.csv").string();
  const std::string svg = (dir / "h.svg").string();
  write_heatmap_csv(csv, h);
  write_heatmap_svg(svg, h);

  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "th1_dbm,-120,-115");
  std::getline(in, line);
  CHECK(line == "-110,1.000000,2.000000");

  std::ifstream svg_in(svg);
  std::string svg_text((std::istreambuf_iterator<char>(svg_in)),
                       std::istreambuf_iterator<char>());
  CHECK(svg_text.find("<svg") != std::string::npos);
  CHECK(svg_text.find("</svg>") != std::string::npos);
  // One rect per cell plus the color bar.
  size_t rects = 0;
  for (size_t pos = svg_text.find("<rect"); pos != std::string::npos;
       pos = svg_text.find("<rect", pos + 1))
    ++rects;
  CHECK(rects == 3 * 2 + 1);
  fs::remove_all(dir);
}

TEST_CASE("missing dataset cells are reported") {
  SweepSpec spec;
  spec.ttt_values = {64};
  spec.th1_range = {-110, -100, 5};
  spec.th2_range = {-110, -100, 5};
  Dataset ds;  // empty
  CHECK_THROWS_AS(heatmap_from_dataset(ds, spec, Kpi::hosr, 64), std::runtime_error);
}
