#include <doctest.h>

#include <cmath>

#include "a5opt/mobility.hpp"

using namespace a5opt;

TEST_CASE("spawn count follows density times area") {
  MobilityConfig mob;  // 15 per km^2
  CHECK(spawn_users(mob, 2000.0, 1).size() == 60);
  mob.user_density_per_km2 = 1.0;
  CHECK(spawn_users(mob, 1000.0, 1).size() == 1);
  CHECK_THROWS_AS(spawn_users(mob, 0.0, 1), std::invalid_argument);
}

TEST_CASE("spawn is deterministic per seed and draws speeds from the set") {
  MobilityConfig mob;
  const auto a = spawn_users(mob, 2000.0, 99);
  const auto b = spawn_users(mob, 2000.0, 99);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].position.x == b[i].position.x);
    CHECK(a[i].position.y == b[i].position.y);
    CHECK(a[i].speed_mps == b[i].speed_mps);
    CHECK(a[i].waypoint.x == b[i].waypoint.x);
    bool in_set = false;
    for (double v : mob.speed_set_kmh) in_set = in_set || a[i].speed_mps == kmh_to_mps(v);
    CHECK(in_set);
    CHECK(a[i].position.x >= 0.0);
    CHECK(a[i].position.x <= 2000.0);
  }
}

TEST_CASE("advance moves exactly speed*dt toward the waypoint") {
  User u;
  u.rng = Rng(1);
  u.position = {0.0, 0.0};
  u.waypoint = {10.0, 0.0};
  u.speed_mps = 1.0;
  advance(u, 1.0, 100.0);
  CHECK(u.position.x == doctest::Approx(1.0));
  CHECK(u.position.y == doctest::Approx(0.0));
}

TEST_CASE("waypoint arrival carries the residual distance") {
  User u;
  u.rng = Rng(7);
  u.position = {0.0, 0.0};
  u.waypoint = {0.5, 0.0};
  u.speed_mps = 1.0;
  advance(u, 1.0, 100.0);
  // Arrived at (0.5, 0) then traveled the remaining 0.5 m toward a fresh
  // waypoint: total displacement from the old waypoint is exactly 0.5 m.
  CHECK(distance(u.position, {0.5, 0.0}) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("pause time is consumed at waypoints") {
  User u;
  u.rng = Rng(3);
  u.position = {0.0, 0.0};
  u.waypoint = {1.0, 0.0};
  u.speed_mps = 1.0;
  advance(u, 1.0, 100.0, /*pause_s=*/5.0);
  CHECK(u.position.x == doctest::Approx(1.0));
  CHECK(u.pause_remaining_s == doctest::Approx(5.0));
  advance(u, 2.0, 100.0, 5.0);
  CHECK(u.position.x == doctest::Approx(1.0));  // still paused
  CHECK(u.pause_remaining_s == doctest::Approx(3.0));
}

TEST_CASE("long random walks stay in bounds with bounded step length") {
  MobilityConfig mob;
  auto users = spawn_users(mob, 2000.0, 5);
  const double dt = 0.032;
  for (int step = 0; step < 20000; ++step) {
    for (User& u : users) {
      const Vec2 before = u.position;
      const double speed = u.speed_mps;
      advance(u, dt, 2000.0);
      CHECK(u.speed_mps == speed);  // speed constancy
      CHECK(u.position.x >= 0.0);
      CHECK(u.position.x <= 2000.0);
      CHECK(u.position.y >= 0.0);
      CHECK(u.position.y <= 2000.0);
      CHECK(distance(before, u.position) <= speed * dt + 1e-9);
    }
  }
}

TEST_CASE("random waypoint occupancy is center-biased, not uniform") {
  MobilityConfig mob;
  mob.speed_set_kmh = {60.0};
  auto users = spawn_users(mob, 2000.0, 17);
  long inside = 0, total = 0;
  for (int step = 0; step < 30000; ++step) {
    for (User& u : users) {
      advance(u, 0.1, 2000.0);
      if (step < 5000) continue;  // let the stationary bias develop
      ++total;
      if (u.position.x > 500.0 && u.position.x < 1500.0 && u.position.y > 500.0 &&
          u.position.y < 1500.0)
        ++inside;
    }
  }
  // A uniform distribution would put 25% in the central quarter-area box.
  CHECK(static_cast<double>(inside) / total > 0.30);
}
