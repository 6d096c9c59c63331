#include <doctest.h>

#include <cmath>

#include "a5opt/sensitivity.hpp"

using namespace a5opt;

namespace {

// Analytic Sobol indices for the Ishigami function, coded from the known
// variance decomposition (independent of the estimator under test).
struct IshigamiOracle {
  double s1, s2, s3;
  IshigamiOracle(double a, double b) {
    const double pi4 = kPi * kPi * kPi * kPi;
    const double pi8 = pi4 * pi4;
    const double v1 = 0.5 * (1.0 + b * pi4 / 5.0) * (1.0 + b * pi4 / 5.0);
    const double v2 = a * a / 8.0;
    const double v = a * a / 8.0 + b * pi4 / 5.0 + b * b * pi8 / 18.0 + 0.5;
    s1 = v1 / v;
    s2 = v2 / v;
    s3 = 0.0;
  }
};

double ishigami(std::span<const double> x, double a, double b) {
  return std::sin(x[0]) + a * std::sin(x[1]) * std::sin(x[1]) +
         b * x[2] * x[2] * x[2] * x[2] * std::sin(x[0]);
}

std::vector<SobolDim> cube(double lo, double hi) {
  return {SobolDim::continuous(lo, hi), SobolDim::continuous(lo, hi),
          SobolDim::continuous(lo, hi)};
}

}  // namespace

TEST_CASE("saltelli sample counts, bounds and discrete binning") {
  SobolConfig cfg;
  cfg.n_base = 64;
  const std::vector<SobolDim> dims = {SobolDim::discrete({64, 128, 256, 320, 512}),
                                      SobolDim::continuous(-120, -90),
                                      SobolDim::continuous(-120, -90)};
  const SaltelliSample s = saltelli_matrices(dims, cfg);
  CHECK(s.total_rows() == 64u * 5u);  // n * (d + 2)
  auto check_rows = [&](const std::vector<std::vector<double>>& m) {
    for (const auto& row : m) {
      bool ttt_ok = false;
      for (double v : {64.0, 128.0, 256.0, 320.0, 512.0}) ttt_ok = ttt_ok || row[0] == v;
      CHECK(ttt_ok);
      CHECK(row[1] >= -120.0);
      CHECK(row[1] <= -90.0);
      CHECK(row[2] >= -120.0);
      CHECK(row[2] <= -90.0);
    }
  };
  check_rows(s.a);
  check_rows(s.b);
  for (const auto& m : s.ab) check_rows(m);

  // Deterministic per seed.
  const SaltelliSample again = saltelli_matrices(dims, cfg);
  CHECK(again.a == s.a);
  CHECK(again.b == s.b);

  SobolConfig bad;
  bad.n_base = 100;  // not a power of two
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.n_base = 32;  // too small
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("constant function is flagged as zero variance") {
  SobolConfig cfg;
  cfg.n_base = 128;
  const SobolIndices idx =
      sobol_indices([](std::span<const double>) { return 3.5; }, cube(0, 1), cfg);
  CHECK(idx.zero_variance);
  for (const SobolIndex& s : idx.per_input) {
    CHECK(s.first_order == 0.0);
    CHECK(s.total_order == 0.0);
  }
}

TEST_CASE("single-input function concentrates all variance on x1") {
  SobolConfig cfg;
  cfg.n_base = 4096;
  const SobolIndices idx =
      sobol_indices([](std::span<const double> x) { return x[0]; }, cube(-1, 1), cfg);
  REQUIRE(idx.per_input.size() == 3);
  CHECK(std::abs(idx.per_input[0].first_order - 1.0) < 0.02);
  CHECK(std::abs(idx.per_input[1].first_order) < 0.02);
  CHECK(std::abs(idx.per_input[2].first_order) < 0.02);
  CHECK(std::abs(idx.per_input[0].total_order - 1.0) < 0.02);
  CHECK(std::abs(idx.per_input[1].total_order) < 0.02);
}

TEST_CASE("Ishigami indices match the analytic oracle within 0.05") {
  const double a = 7.0, b = 0.1;
  const IshigamiOracle oracle(a, b);
  CHECK(oracle.s1 == doctest::Approx(0.3139).epsilon(1e-3));
  CHECK(oracle.s2 == doctest::Approx(0.4424).epsilon(1e-3));

  SobolConfig cfg;
  cfg.n_base = 4096;
  const SobolIndices idx = sobol_indices(
      [&](std::span<const double> x) { return ishigami(x, a, b); }, cube(-kPi, kPi), cfg);
  CHECK(std::abs(idx.per_input[0].first_order - oracle.s1) < 0.05);
  CHECK(std::abs(idx.per_input[1].first_order - oracle.s2) < 0.05);
  CHECK(std::abs(idx.per_input[2].first_order - oracle.s3) < 0.05);
  // x3 only matters through its interaction with x1.
  CHECK(idx.per_input[2].total_order > 0.1);
}

TEST_CASE("additive function has total close to first order") {
  SobolConfig cfg;
  cfg.n_base = 4096;
  const SobolIndices idx = sobol_indices(
      [](std::span<const double> x) { return 2.0 * x[0] + std::sin(x[1]) + 0.5 * x[2] * x[2]; },
      cube(-2, 2), cfg);
  for (const SobolIndex& s : idx.per_input) {
    const double combined = 3.0 * (s.first_order_se + s.total_order_se);
    CHECK(std::abs(s.total_order - s.first_order) <= combined + 1e-12);
  }
}

TEST_CASE("doubling the base sample moves indices by less than 3 standard errors") {
  auto f = [](std::span<const double> x) {
    return std::sin(x[0]) + 0.6 * x[1] * x[1] + 0.2 * x[0] * x[2];
  };
  SobolConfig small;
  small.n_base = 2048;
  SobolConfig big;
  big.n_base = 4096;
  const SobolIndices a = sobol_indices(f, cube(-1, 1), small);
  const SobolIndices b = sobol_indices(f, cube(-1, 1), big);
  for (size_t i = 0; i < 3; ++i) {
    const double se = 3.0 * (a.per_input[i].first_order_se + b.per_input[i].first_order_se);
    CHECK(std::abs(a.per_input[i].first_order - b.per_input[i].first_order) <= se + 1e-12);
  }
}

TEST_CASE("indices are invariant under affine rescaling of f") {
  auto f = [](std::span<const double> x) { return std::sin(3.0 * x[0]) + x[1] * x[2]; };
  SobolConfig cfg;
  cfg.n_base = 1024;
  const SobolIndices base = sobol_indices(f, cube(-1, 1), cfg);
  const SobolIndices doubled = sobol_indices(
      [&](std::span<const double> x) { return 2.0 * f(x); }, cube(-1, 1), cfg);
  const SobolIndices affine = sobol_indices(
      [&](std::span<const double> x) { return -3.0 * f(x) + 7.0; }, cube(-1, 1), cfg);
  for (size_t i = 0; i < 3; ++i) {
    // Pure doubling is exact in floating point; a general affine map is
    // exact mathematically and tight numerically.
    CHECK(doubled.per_input[i].first_order == base.per_input[i].first_order);
    CHECK(doubled.per_input[i].total_order == base.per_input[i].total_order);
    CHECK(affine.per_input[i].first_order ==
          doctest::Approx(base.per_input[i].first_order).epsilon(1e-9));
    CHECK(affine.per_input[i].total_order ==
          doctest::Approx(base.per_input[i].total_order).epsilon(1e-9));
  }
}
