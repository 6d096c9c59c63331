#pragma once

// Random-waypoint mobility on the square area. Users are independent
// records with their own random streams derived from (seed, user id), so
// advancing them in parallel or in any order gives identical trajectories.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "a5opt/geom.hpp"
#include "a5opt/rng.hpp"

namespace a5opt {

struct MobilityConfig {
  double user_density_per_km2 = 15.0;
  std::vector<double> speed_set_kmh = {3.0, 60.0, 120.0, 240.0};
  double pause_s = 0.0;

  void validate() const {
    if (!(user_density_per_km2 > 0.0))
      throw std::invalid_argument("mobility: user_density_per_km2 must be > 0");
    if (speed_set_kmh.empty())
      throw std::invalid_argument("mobility: speed_set_kmh must be non-empty");
    for (double v : speed_set_kmh)
      if (!(v > 0.0)) throw std::invalid_argument("mobility: speeds must be > 0");
    if (pause_s < 0.0) throw std::invalid_argument("mobility: pause_s must be >= 0");
  }
};

struct User {
  int id = 0;
  Vec2 position;
  double speed_mps = 0.0;  // constant for the user's lifetime
  Vec2 waypoint;
  int serving_cell = -1;  // assigned by the simulation at attach time
  double pause_remaining_s = 0.0;
  // Per-target TTT accumulators, indexed by cell id; owned here, driven by
  // the handover engine.
  std::vector<int> a5_accum_ms;
  std::vector<int> a3_accum_ms;
  Rng rng{0};
};

inline double kmh_to_mps(double kmh) { return kmh / 3.6; }

// Uniform initial deployment; count = round(density * area_km2). Speeds are
// drawn uniformly from the speed set and never change afterwards.
inline std::vector<User> spawn_users(const MobilityConfig& mob, double area_side_m,
                                     std::uint64_t seed) {
  mob.validate();
  if (!(area_side_m > 0.0)) throw std::invalid_argument("spawn_users: zero-area network");
  const double area_km2 = (area_side_m / 1000.0) * (area_side_m / 1000.0);
  const long long n = std::llround(mob.user_density_per_km2 * area_km2);
  std::vector<User> users;
  users.reserve(static_cast<size_t>(std::max(0LL, n)));
  for (long long i = 0; i < n; ++i) {
    User u;
    u.id = static_cast<int>(i);
    u.rng = Rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
    u.position = {u.rng.next_double() * area_side_m, u.rng.next_double() * area_side_m};
    const int si = u.rng.next_int(0, static_cast<int>(mob.speed_set_kmh.size()) - 1);
    u.speed_mps = kmh_to_mps(mob.speed_set_kmh[si]);
    u.waypoint = {u.rng.next_double() * area_side_m, u.rng.next_double() * area_side_m};
    users.push_back(u);
  }
  return users;
}

// Advance one user by dt seconds. On waypoint arrival the residual time is
// carried into the leg toward a freshly drawn waypoint, so the step length
// is exactly speed*dt (minus any pause time consumed).
inline void advance(User& u, double dt_s, double area_side_m, double pause_s = 0.0) {
  if (!(dt_s > 0.0)) throw std::invalid_argument("advance: dt must be > 0");
  double t = dt_s;
  int guard = 0;
  while (t > 1e-12 && ++guard < 1000) {
    if (u.pause_remaining_s > 0.0) {
      const double used = std::min(u.pause_remaining_s, t);
      u.pause_remaining_s -= used;
      t -= used;
      continue;
    }
    const Vec2 leg = u.waypoint - u.position;
    const double len = norm(leg);
    const double step = u.speed_mps * t;
    if (step < len) {
      u.position = u.position + leg * (step / len);
      return;
    }
    u.position = u.waypoint;
    t -= u.speed_mps > 0.0 ? len / u.speed_mps : t;
    u.pause_remaining_s = pause_s;
    u.waypoint = {u.rng.next_double() * area_side_m, u.rng.next_double() * area_side_m};
  }
}

}  // namespace a5opt
