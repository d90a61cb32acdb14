#include "grouptrack/movement.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace grouptrack::movement {
namespace {

Vec2 clip_norm(const Vec2& v, double limit) {
  const double n = v.norm();
  if (n > limit && n > 0.0) return v * (limit / n);
  return v;
}

Vec2 clamp_to_square(const Vec2& p, double side) {
  return {std::clamp(p.x(), 0.0, side), std::clamp(p.y(), 0.0, side)};
}

bool inside_square(const Vec2& p, double side) {
  return p.x() >= 0.0 && p.x() <= side && p.y() >= 0.0 && p.y() <= side;
}

Vec2 uniform_in_disc(const Vec2& center, double radius, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = radius * std::sqrt(unit(rng));
  const double theta = 2.0 * std::numbers::pi * unit(rng);
  return center + Vec2(r * std::cos(theta), r * std::sin(theta));
}

}  // namespace

WorldConfig WorldConfig::defaults() {
  WorldConfig w;
  w.living_areas = {Disc{{1000.0, 1000.0}, 500.0},
                    Disc{{49000.0, 49000.0}, 500.0}};
  w.foraging_area = Disc{{25000.0, 25000.0}, 1000.0};
  return w;
}

void WorldConfig::validate() const {
  if (!(area_side > 0.0)) throw std::invalid_argument("world: area_side must be > 0");
  if (n_nodes == 0) throw std::invalid_argument("world: n_nodes must be >= 1");
  if (duration < 0) throw std::invalid_argument("world: duration must be >= 0");
  if (!(max_speed > 0.0)) throw std::invalid_argument("world: max_speed must be > 0");
  if (!(target_spacing > 0.0)) throw std::invalid_argument("world: target_spacing must be > 0");
  if (start_radius < 0.0) throw std::invalid_argument("world: start_radius must be >= 0");
  if (living_areas.empty()) throw std::invalid_argument("world: at least one living area is required");
  auto check_region = [&](const Disc& d, const std::string& name) {
    if (!(d.radius > 0.0)) throw std::invalid_argument("world: " + name + " radius must be > 0");
    if (!inside_square(d.center, area_side))
      throw std::invalid_argument("world: " + name + " center lies outside the area");
  };
  for (std::size_t i = 0; i < living_areas.size(); ++i)
    check_region(living_areas[i], "living area " + std::to_string(i + 1));
  check_region(foraging_area, "foraging area");
}

void FlockingParams::validate() const {
  if (!(neighbor_radius > 0.0)) throw std::invalid_argument("flock: neighbor_radius must be > 0");
  if (w_separation < 0.0 || w_alignment < 0.0 || w_cohesion < 0.0 || w_goal < 0.0)
    throw std::invalid_argument("flock: rule weights must be >= 0");
  if (separation_distance < 0.0) throw std::invalid_argument("flock: separation_distance must be >= 0");
  if (rw_step_sigma < 0.0) throw std::invalid_argument("flock: rw_step_sigma must be >= 0");
  if (wander_sigma < 0.0) throw std::invalid_argument("flock: wander_sigma must be >= 0");
}

std::vector<Kinematics> flocking_step(std::span<const Kinematics> states,
                                      const FlockingParams& params,
                                      const Vec2& goal, double max_speed,
                                      std::span<const Vec2> wander) {
  if (!wander.empty() && wander.size() != states.size())
    throw std::invalid_argument("flocking_step: one wander term per node is required");
  std::vector<Kinematics> next(states.begin(), states.end());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Kinematics& self = states[i];
    Vec2 separation = Vec2::Zero();
    Vec2 velocity_sum = Vec2::Zero();
    Vec2 position_sum = Vec2::Zero();
    std::size_t neighbors = 0;

    for (std::size_t j = 0; j < states.size(); ++j) {
      if (j == i) continue;
      const Vec2 offset = self.position - states[j].position;
      const double d = offset.norm();
      if (d > params.neighbor_radius) continue;
      ++neighbors;
      velocity_sum += states[j].velocity;
      position_sum += states[j].position;
      // Collocated nodes have no defined push direction.
      if (d > 0.0 && d < params.separation_distance)
        separation += offset / d * (params.separation_distance - d) /
                      params.separation_distance;
    }

    Vec2 accel = params.w_separation * separation;
    if (neighbors > 0) {
      const double n = static_cast<double>(neighbors);
      accel += params.w_alignment * (velocity_sum / n - self.velocity);
      accel += params.w_cohesion * (position_sum / n - self.position);
    }
    const Vec2 to_goal = goal - self.position;
    const double goal_dist = to_goal.norm();
    if (goal_dist > 0.0) {
      const Vec2 desired = to_goal / goal_dist * max_speed;
      accel += params.w_goal * (desired - self.velocity);
    }
    if (!wander.empty()) accel += wander[i];

    next[i].velocity = clip_norm(self.velocity + accel, max_speed);
    next[i].position = self.position + next[i].velocity;
  }
  return next;
}

Vec2 random_walk_step(const Vec2& position, const FlockingParams& params,
                      const Disc& region, double max_speed, Rng& rng) {
  if (params.rw_step_sigma == 0.0) return position;
  std::normal_distribution<double> gauss(0.0, params.rw_step_sigma);
  const double dx = gauss(rng);
  const double dy = gauss(rng);
  Vec2 step = clip_norm(Vec2(dx, dy), max_speed);
  Vec2 next = position + step;

  const Vec2 radial = next - region.center;
  const double r = radial.norm();
  if (r > region.radius) {
    next = region.center + radial / r * std::max(0.0, 2.0 * region.radius - r);
    // Reflection can lengthen the step slightly; pull back along the chord,
    // which stays inside the disc by convexity.
    next = position + clip_norm(next - position, max_speed);
  }
  return next;
}

std::vector<Trajectory> generate_tracks(const WorldConfig& world,
                                        const FlockingParams& flock,
                                        std::uint64_t seed) {
  world.validate();
  flock.validate();
  Rng rng = make_rng(seed, Stream::kMovement);

  const std::size_t n = world.n_nodes;
  const std::size_t n_areas = world.living_areas.size();
  const auto steps = static_cast<std::size_t>(world.duration);

  std::vector<Trajectory> tracks(n);
  std::vector<Kinematics> state(n);
  std::vector<bool> foraging(n, false);

  for (std::size_t i = 0; i < n; ++i) {
    const Disc& home = world.living_areas[i % n_areas];
    const std::size_t group = n / n_areas + (i % n_areas < n % n_areas ? 1 : 0);
    double radius = world.start_radius > 0.0
                        ? world.start_radius
                        : world.target_spacing *
                              std::sqrt(static_cast<double>(group) / std::numbers::pi);
    radius = std::min(radius, home.radius);
    state[i].position = clamp_to_square(uniform_in_disc(home.center, radius, rng),
                                        world.area_side);
    foraging[i] = world.foraging_area.contains(state[i].position);
    tracks[i].node_id = static_cast<NodeId>(i);
    tracks[i].positions.reserve(steps + 1);
    tracks[i].positions.push_back(state[i].position);
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vec2> wander(n, Vec2::Zero());
  for (std::size_t t = 1; t <= steps; ++t) {
    const bool any_journeying = std::find(foraging.begin(), foraging.end(), false) != foraging.end();
    if (any_journeying) {
      if (flock.wander_sigma > 0.0)
        for (std::size_t i = 0; i < n; ++i)
          if (!foraging[i]) wander[i] = flock.wander_sigma * Vec2(gauss(rng), gauss(rng));
      const auto moved = flocking_step(state, flock, world.foraging_area.center,
                                       world.max_speed, wander);
      for (std::size_t i = 0; i < n; ++i)
        if (!foraging[i]) state[i] = moved[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (foraging[i]) {
        const Vec2 next = random_walk_step(state[i].position, flock, world.foraging_area,
                                           world.max_speed, rng);
        state[i].velocity = next - state[i].position;
        state[i].position = next;
      }
      state[i].position = clamp_to_square(state[i].position, world.area_side);
      if (!foraging[i] && world.foraging_area.contains(state[i].position)) foraging[i] = true;
      tracks[i].positions.push_back(state[i].position);
    }
  }
  return tracks;
}

std::size_t count_components(std::span<const Vec2> positions, double range) {
  std::vector<std::size_t> parent(positions.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = positions.size();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      if ((positions[i] - positions[j]).norm() > range) continue;
      const std::size_t a = find(i), b = find(j);
      if (a != b) {
        parent[a] = b;
        --components;
      }
    }
  }
  return components;
}

void write_tracks_csv(std::ostream& os, std::span<const Trajectory> tracks) {
  os << "t,node_id,x,y\n";
  std::size_t length = 0;
  for (const auto& tr : tracks) length = std::max(length, tr.size());
  char line[128];
  for (std::size_t t = 0; t < length; ++t) {
    for (const auto& tr : tracks) {
      if (t >= tr.size()) continue;
      std::snprintf(line, sizeof line, "%zu,%u,%.6f,%.6f\n", t, tr.node_id,
                    tr.positions[t].x(), tr.positions[t].y());
      os << line;
    }
  }
}

}  // namespace grouptrack::movement
