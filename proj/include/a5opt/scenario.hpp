#pragma once

// Static network scenario: cell geometry and the radio model (log-distance
// pathloss, 3GPP sector antenna pattern, spatially correlated log-normal
// shadowing). Everything here is immutable after construction and safe to
// share across sweep workers.

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "a5opt/geom.hpp"
#include "a5opt/rng.hpp"

namespace a5opt {

inline constexpr double kUserHeightM = 1.5;
inline constexpr double kSpeedOfLightMps = 3.0e8;
inline constexpr double kSmallCellOffsetM = 300.0;
inline constexpr double kSmallCellBearingDeg = 60.0;

struct NetworkConfig {
  double area_side_m = 2000.0;
  int n_macro_sites = 2;
  int sectors_per_site = 3;
  std::vector<double> macro_bands = {1.7, 2.1};  // GHz
  int small_cells_per_site = 1;
  double small_band_ghz = 3.5;
  double macro_height_m = 30.0;
  double small_height_m = 20.0;
  double tx_power_dbm = 30.0;  // both tiers
  double pathloss_exponent = 3.0;
  double shadowing_std_db = 4.0;
  double shadowing_corr_dist_m = 50.0;
  // Carried for scenario fidelity; no implemented KPI reads these.
  std::vector<double> bandwidth_mhz = {10.0, 15.0, 20.0};
  std::vector<int> total_prbs = {52, 78, 106};

  void validate() const {
    if (!(area_side_m > 0.0)) throw std::invalid_argument("network: area_side_m must be > 0");
    if (n_macro_sites < 1) throw std::invalid_argument("network: n_macro_sites must be >= 1");
    if (sectors_per_site < 1) throw std::invalid_argument("network: sectors_per_site must be >= 1");
    if (small_cells_per_site < 0)
      throw std::invalid_argument("network: small_cells_per_site must be >= 0");
    if (macro_bands.empty()) throw std::invalid_argument("network: macro_bands must be non-empty");
    for (double b : macro_bands)
      if (!(b > 0.0)) throw std::invalid_argument("network: macro band frequencies must be > 0");
    if (small_cells_per_site > 0 && !(small_band_ghz > 0.0))
      throw std::invalid_argument("network: small_band_ghz must be > 0");
    if (!(macro_height_m > 0.0) || !(small_height_m > 0.0))
      throw std::invalid_argument("network: antenna heights must be > 0");
    if (!(pathloss_exponent > 0.0))
      throw std::invalid_argument("network: pathloss_exponent must be > 0");
    if (shadowing_std_db < 0.0)
      throw std::invalid_argument("network: shadowing_std_db must be >= 0");
    if (!(shadowing_corr_dist_m > 0.0))
      throw std::invalid_argument("network: shadowing_corr_dist_m must be > 0");
  }
};

enum class CellKind { macro_sector, small_omni };

struct Cell {
  int id = 0;
  Vec2 site_position;     // antenna location (offset point for small cells)
  double bearing_deg = 0; // sector boresight, CCW from +x; unused for omni
  double band_ghz = 0;
  double tx_power_dbm = 0;
  double height_m = 0;
  CellKind kind = CellKind::macro_sector;
};

struct NetworkLayout {
  std::vector<Cell> cells;
  NetworkConfig config;
};

// Fixed symmetric placement: macro sites evenly spaced on the horizontal
// midline (two sites land on side/3 and 2*side/3), three sector bearings
// at 0/120/240 for the default config, one small cell 300 m out at 60 deg.
inline NetworkLayout build_layout(const NetworkConfig& cfg) {
  cfg.validate();
  NetworkLayout layout;
  layout.config = cfg;
  int id = 0;
  std::vector<Vec2> sites;
  sites.reserve(cfg.n_macro_sites);
  for (int s = 0; s < cfg.n_macro_sites; ++s) {
    const double x = cfg.area_side_m * static_cast<double>(s + 1) / (cfg.n_macro_sites + 1);
    sites.push_back({x, cfg.area_side_m / 2.0});
  }
  for (int s = 0; s < cfg.n_macro_sites; ++s) {
    for (int k = 0; k < cfg.sectors_per_site; ++k) {
      const double bearing = 360.0 * k / cfg.sectors_per_site;
      for (double band : cfg.macro_bands) {
        layout.cells.push_back({id++, sites[s], bearing, band, cfg.tx_power_dbm,
                                cfg.macro_height_m, CellKind::macro_sector});
      }
    }
  }
  for (int s = 0; s < cfg.n_macro_sites; ++s) {
    for (int j = 0; j < cfg.small_cells_per_site; ++j) {
      const double bearing =
          kSmallCellBearingDeg + 360.0 * j / std::max(1, cfg.small_cells_per_site);
      const Vec2 pos = sites[s] + bearing_unit(bearing) * kSmallCellOffsetM;
      layout.cells.push_back({id++, pos, 0.0, cfg.small_band_ghz, cfg.tx_power_dbm,
                              cfg.small_height_m, CellKind::small_omni});
    }
  }
  return layout;
}

// Free-space intercept at 1 m: 20*log10(4*pi*f/c * 1m).
inline double freespace_ref_db(double f_ghz) {
  return 20.0 * std::log10(4.0 * kPi * f_ghz * 1e9 / kSpeedOfLightMps);
}

// Log-distance pathloss over the 3-D distance (user height 1.5 m), with the
// distance clamped to 1 m so the value stays finite at the antenna.
inline double pathloss_db(const Cell& cell, Vec2 pos, const NetworkConfig& cfg) {
  const double dx = pos.x - cell.site_position.x;
  const double dy = pos.y - cell.site_position.y;
  const double dz = cell.height_m - kUserHeightM;
  double d2 = dx * dx + dy * dy + dz * dz;
  if (d2 < 1.0) d2 = 1.0;
  // 10*n*log10(d) == 5*n*log10(d^2), saves the sqrt in the hot loop.
  return freespace_ref_db(cell.band_ghz) + 5.0 * cfg.pathloss_exponent * std::log10(d2);
}

// 3GPP sector pattern A(theta) = -min(12*(theta/65)^2, 25) dB; omni is 0 dB.
inline double antenna_gain_db(const Cell& cell, Vec2 pos) {
  if (cell.kind == CellKind::small_omni) return 0.0;
  const Vec2 dir = pos - cell.site_position;
  if (dir.x == 0.0 && dir.y == 0.0) return 0.0;  // at the mast: boresight by convention
  const Vec2 bore = bearing_unit(cell.bearing_deg);
  const double theta_deg = std::abs(rad_to_deg(std::atan2(cross(bore, dir), dot(bore, dir))));
  const double a = 12.0 * (theta_deg / 65.0) * (theta_deg / 65.0);
  return -std::min(a, 25.0);
}

// Per-cell spatially correlated log-normal shadowing field.
//
// Realization: a lattice of unit-variance Gaussians with separable AR(1)
// correlation rho = exp(-spacing/corr_dist) along each axis, queried with
// bilinear interpolation and renormalized so the marginal standard
// deviation equals shadowing_std_db at every position. Along an axis the
// autocorrelation at lag L is exp(-L/corr_dist) exactly on lattice points.
// Queries are pure given (seed, cell id, position).
class ShadowField {
 public:
  ShadowField() = default;  // disabled field, samples are 0 dB

  ShadowField(const NetworkLayout& layout, std::uint64_t seed) {
    const NetworkConfig& cfg = layout.config;
    std_db_ = cfg.shadowing_std_db;
    if (std_db_ <= 0.0) return;
    spacing_ = std::clamp(cfg.shadowing_corr_dist_m / 5.0, 0.25,
                          std::max(1.0, cfg.area_side_m / 4.0));
    origin_ = -2.0 * spacing_;
    const double extent = cfg.area_side_m + 4.0 * spacing_;
    n_ = static_cast<int>(std::ceil(extent / spacing_)) + 1;
    rho_ = std::exp(-spacing_ / cfg.shadowing_corr_dist_m);
    const double q = std::sqrt(1.0 - rho_ * rho_);
    grids_.resize(layout.cells.size());
    for (const Cell& cell : layout.cells) {
      std::vector<double>& g = grids_[cell.id];
      g.resize(static_cast<size_t>(n_) * n_);
      Rng rng(derive_stream(seed, 0xC0FFEEull + static_cast<std::uint64_t>(cell.id)));
      // Row pass: AR(1) along x, stationary from the first node.
      for (int iy = 0; iy < n_; ++iy) {
        double* row = g.data() + static_cast<size_t>(iy) * n_;
        row[0] = rng.next_normal();
        for (int ix = 1; ix < n_; ++ix) row[ix] = rho_ * row[ix - 1] + q * rng.next_normal();
      }
      // Column pass: AR(1) across rows; marginals stay N(0,1).
      for (int iy = 1; iy < n_; ++iy) {
        double* row = g.data() + static_cast<size_t>(iy) * n_;
        const double* prev = row - n_;
        for (int ix = 0; ix < n_; ++ix) row[ix] = rho_ * prev[ix] + q * row[ix];
      }
    }
  }

  bool enabled() const { return std_db_ > 0.0; }
  double node_spacing_m() const { return spacing_; }
  double origin_m() const { return origin_; }

  double sample_db(int cell_id, Vec2 pos) const {
    if (!enabled()) return 0.0;
    const double eps = 1e-9;
    double gx = (pos.x - origin_) / spacing_;
    double gy = (pos.y - origin_) / spacing_;
    gx = std::clamp(gx, 0.0, n_ - 1.0 - eps);
    gy = std::clamp(gy, 0.0, n_ - 1.0 - eps);
    const int ix = static_cast<int>(gx);
    const int iy = static_cast<int>(gy);
    const double fx = gx - ix;
    const double fy = gy - iy;
    const double* g = grids_[cell_id].data() + static_cast<size_t>(iy) * n_ + ix;
    const double v00 = g[0], v10 = g[1], v01 = g[n_], v11 = g[n_ + 1];
    const double w00 = (1.0 - fx) * (1.0 - fy);
    const double w10 = fx * (1.0 - fy);
    const double w01 = (1.0 - fx) * fy;
    const double w11 = fx * fy;
    const double raw = w00 * v00 + w10 * v10 + w01 * v01 + w11 * v11;
    // Variance of the interpolated value given the lattice correlations;
    // dividing by its sqrt keeps the marginal at std_db everywhere.
    const double var = w00 * w00 + w10 * w10 + w01 * w01 + w11 * w11 +
                       2.0 * rho_ * (w00 * w10 + w01 * w11 + w00 * w01 + w10 * w11) +
                       2.0 * rho_ * rho_ * (w00 * w11 + w10 * w01);
    return std_db_ * raw / std::sqrt(var);
  }

 private:
  double std_db_ = 0.0;
  double spacing_ = 1.0;
  double origin_ = 0.0;
  double rho_ = 0.0;
  int n_ = 0;
  std::vector<std::vector<double>> grids_;
};

inline double rsrp_dbm(const Cell& cell, Vec2 pos, const ShadowField& shadow,
                       const NetworkConfig& cfg) {
  return cell.tx_power_dbm - pathloss_db(cell, pos, cfg) + antenna_gain_db(cell, pos) +
         shadow.sample_db(cell.id, pos);
}

// Cell with maximal RSRP at pos; ties go to the lowest id.
inline int best_server(const NetworkLayout& layout, Vec2 pos, const ShadowField& shadow) {
  if (layout.cells.empty()) throw std::invalid_argument("best_server: empty layout");
  int best = layout.cells.front().id;
  double best_rsrp = rsrp_dbm(layout.cells.front(), pos, shadow, layout.config);
  for (size_t i = 1; i < layout.cells.size(); ++i) {
    const double r = rsrp_dbm(layout.cells[i], pos, shadow, layout.config);
    if (r > best_rsrp) {
      best_rsrp = r;
      best = layout.cells[i].id;
    }
  }
  return best;
}

}  // namespace a5opt
