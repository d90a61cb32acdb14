#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "grouptrack/movement.hpp"

using namespace grouptrack;
using namespace grouptrack::movement;

namespace {

FlockingParams only(double FlockingParams::*weight, double value) {
  FlockingParams p;
  p.w_separation = p.w_alignment = p.w_cohesion = p.w_goal = 0.0;
  p.wander_sigma = 0.0;
  p.*weight = value;
  return p;
}

}  // namespace

TEST_CASE("full-length tracks have one sample per second") {
  const WorldConfig world = WorldConfig::defaults();
  const auto tracks = generate_tracks(world, FlockingParams{}, 1);
  REQUIRE(tracks.size() == 40);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    CHECK(tracks[i].size() == 43201);
    CHECK(tracks[i].node_id == i);
  }

  SUBCASE("speed bound and containment") {
    bool ok = true;
    for (const auto& tr : tracks) {
      for (std::size_t t = 0; t + 1 < tr.size(); ++t) {
        ok &= (tr.positions[t + 1] - tr.positions[t]).norm() <= world.max_speed + 1e-9;
        const Vec2& p = tr.positions[t + 1];
        ok &= p.x() >= 0.0 && p.x() <= world.area_side && p.y() >= 0.0 &&
              p.y() <= world.area_side;
      }
    }
    CHECK(ok);
  }

  SUBCASE("connectivity varies while the flocks travel") {
    std::set<std::size_t> counts;
    std::vector<Vec2> snapshot(tracks.size());
    for (std::size_t t = 0; t < 43200; t += 100) {
      bool journeying = false;
      for (std::size_t i = 0; i < tracks.size(); ++i) {
        snapshot[i] = tracks[i].positions[t];
        journeying |= !world.foraging_area.contains(snapshot[i]);
      }
      if (journeying) counts.insert(count_components(snapshot, 100.0));
    }
    CHECK(counts.size() > 1);
  }

  SUBCASE("every node ends up foraging") {
    for (const auto& tr : tracks)
      CHECK(world.foraging_area.contains(tr.positions.back()));
  }
}

TEST_CASE("track generation is deterministic per seed") {
  WorldConfig world = WorldConfig::defaults();
  world.duration = 2000;
  world.n_nodes = 12;
  std::ostringstream a, b, c;
  write_tracks_csv(a, generate_tracks(world, FlockingParams{}, 9));
  write_tracks_csv(b, generate_tracks(world, FlockingParams{}, 9));
  write_tracks_csv(c, generate_tracks(world, FlockingParams{}, 10));
  CHECK(a.str() == b.str());
  CHECK(a.str() != c.str());
}

TEST_CASE("zero duration gives only starting positions") {
  WorldConfig world = WorldConfig::defaults();
  world.duration = 0;
  const auto tracks = generate_tracks(world, FlockingParams{}, 3);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    REQUIRE(tracks[i].size() == 1);
    CHECK(world.living_areas[i % 2].contains(tracks[i].positions[0]));
  }
}

TEST_CASE("goal seeking alone flies straight at full speed") {
  WorldConfig world = WorldConfig::defaults();
  world.n_nodes = 1;
  world.duration = 500;
  const auto flock = only(&FlockingParams::w_goal, 1.0);
  const auto track = generate_tracks(world, flock, 4).front();
  const Vec2 start = track.positions[0];
  const Vec2 dir = (world.foraging_area.center - start).normalized();
  for (std::size_t t = 1; t < track.size(); ++t) {
    const Vec2 expected = start + dir * world.max_speed * static_cast<double>(t);
    CHECK((track.positions[t] - expected).norm() < 1e-6);
  }
}

TEST_CASE("flocking rules in isolation") {
  const Vec2 goal(1e4, 1e4);
  SUBCASE("separation pushes close nodes apart") {
    const std::vector<Kinematics> s{{{0, 0}, {0, 0}}, {{5, 0}, {0, 0}}};
    const auto next = flocking_step(s, only(&FlockingParams::w_separation, 1.0), goal, 6.0);
    CHECK((next[1].position - next[0].position).norm() > 5.0);
  }
  SUBCASE("cohesion leaves collocated nodes in place") {
    const std::vector<Kinematics> s(4, Kinematics{{7, 7}, {0, 0}});
    const auto next = flocking_step(s, only(&FlockingParams::w_cohesion, 1.0), goal, 6.0);
    for (const auto& k : next) CHECK(k.position == Vec2(7, 7));
  }
  SUBCASE("alignment adopts the neighbors' velocity") {
    const Vec2 v(2.0, 1.0);
    std::vector<Kinematics> s{{{0, 0}, {0, 0}}, {{10, 0}, v}, {{0, 10}, v}, {{-10, 0}, v}};
    const auto next = flocking_step(s, only(&FlockingParams::w_alignment, 1.0), goal, 6.0);
    CHECK((next[0].velocity - v).norm() < 1e-12);
    auto half = only(&FlockingParams::w_alignment, 0.5);
    const auto partial = flocking_step(s, half, goal, 6.0);
    CHECK((partial[0].velocity - v).norm() < v.norm());
  }
  SUBCASE("velocity is clipped") {
    const std::vector<Kinematics> s{{{0, 0}, {50, 0}}};
    const auto next = flocking_step(s, only(&FlockingParams::w_goal, 0.0), goal, 6.0);
    CHECK(next[0].velocity.norm() == doctest::Approx(6.0));
  }
  SUBCASE("wander size must match") {
    const std::vector<Kinematics> s(3);
    const std::vector<Vec2> wander(2, Vec2::Zero());
    CHECK_THROWS_AS(flocking_step(s, FlockingParams{}, goal, 6.0, wander),
                    std::invalid_argument);
  }
}

TEST_CASE("random walk steps") {
  const Disc region{{0, 0}, 1e6};
  Rng rng = make_rng(5, Stream::kMovement);
  FlockingParams p;
  p.rw_step_sigma = 0.0;
  CHECK(random_walk_step({3, 4}, p, region, 6.0, rng) == Vec2(3, 4));

  p.rw_step_sigma = 3.0;
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double len = random_walk_step(region.center, p, region, 1e3, rng).norm();
    sum += len;
    sum2 += len * len;
  }
  // The step length of an isotropic 2-D Gaussian is Rayleigh distributed.
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - 3.0 * std::sqrt(std::numbers::pi / 2.0)) < 3.0 * se);
}

TEST_CASE("random walk stays inside its region") {
  const Disc region{{100, 100}, 10.0};
  FlockingParams p;
  p.rw_step_sigma = 20.0;
  Rng rng = make_rng(6, Stream::kMovement);
  Vec2 pos(109.5, 100.0);
  for (int i = 0; i < 10000; ++i) {
    const Vec2 next = random_walk_step(pos, p, region, 6.0, rng);
    CHECK((next - pos).norm() <= 6.0 + 1e-9);
    CHECK(region.contains(next));
    pos = next;
  }
}

TEST_CASE("component counting") {
  const std::vector<Vec2> pts{{0, 0}, {50, 0}, {100, 0}, {400, 0}, {1000, 1000}};
  CHECK(count_components(pts, 100.0) == 3);
  CHECK(count_components(pts, 10.0) == 5);
  CHECK(count_components(std::vector<Vec2>{}, 1.0) == 0);
}

TEST_CASE("trajectory CSV format") {
  std::vector<Trajectory> tracks(2);
  tracks[0] = {0, {{1, 2}, {3, 4}}};
  tracks[1] = {1, {{5, 6}, {7.25, 8}}};
  std::ostringstream os;
  write_tracks_csv(os, tracks);
  CHECK(os.str() ==
        "t,node_id,x,y\n0,0,1.000000,2.000000\n0,1,5.000000,6.000000\n"
        "1,0,3.000000,4.000000\n1,1,7.250000,8.000000\n");
}

TEST_CASE("world and flock validation") {
  WorldConfig w = WorldConfig::defaults();
  CHECK_NOTHROW(w.validate());
  w.n_nodes = 0;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  w = WorldConfig::defaults();
  w.foraging_area.center = {-5, 0};
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  FlockingParams f;
  f.w_goal = -1;
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);
  f = {};
  f.neighbor_radius = 0;
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);
}
