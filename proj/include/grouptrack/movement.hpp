#pragma once

// Ground-truth flock trajectories: Reynolds flocking from the living areas
// to the foraging area, then an isotropic random walk inside it.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "grouptrack/rng.hpp"
#include "grouptrack/types.hpp"

namespace grouptrack::movement {

struct WorldConfig {
  double area_side = 50000.0;
  std::uint32_t n_nodes = 40;
  std::int64_t duration = 43200;  // seconds
  std::vector<Disc> living_areas;
  Disc foraging_area;
  double max_speed = 6.0;
  double target_spacing = 20.0;
  // Nodes start uniformly inside a disc of this radius around their living
  // area center. Zero means "derive from target_spacing and group size".
  double start_radius = 150.0;

  /// Two 500 m living discs in opposite corners, 1 km foraging disc at the
  /// center of a 50 km square.
  static WorldConfig defaults();
  void validate() const;  // throws std::invalid_argument
};

struct FlockingParams {
  double neighbor_radius = 50.0;
  double w_separation = 1.5;
  double w_alignment = 0.3;
  double w_cohesion = 0.02;
  double w_goal = 0.3;
  double separation_distance = 20.0;
  double rw_step_sigma = 0.1;
  // Std of a random per-step acceleration on journeying nodes, so flocks
  // can shed and regain stragglers.
  double wander_sigma = 0.3;

  void validate() const;
};

/// Position/velocity pair advanced by one 1 s step.
struct Kinematics {
  Vec2 position{0.0, 0.0};
  Vec2 velocity{0.0, 0.0};
};

/// One sample per second; positions[t] is the position at time t.
struct Trajectory {
  NodeId node_id = 0;
  std::vector<Vec2> positions;

  std::size_t size() const { return positions.size(); }
};

/// Reynolds update with explicit Euler, dt = 1 s. Each node's velocity gets
/// the weighted sum of separation, alignment, cohesion and goal-seek
/// accelerations (plus `wander[i]` when given) and is clipped to max_speed.
std::vector<Kinematics> flocking_step(std::span<const Kinematics> states,
                                      const FlockingParams& params,
                                      const Vec2& goal, double max_speed,
                                      std::span<const Vec2> wander = {});

/// Gaussian step reflected at the region boundary, displacement clipped to
/// max_speed.
Vec2 random_walk_step(const Vec2& position, const FlockingParams& params,
                      const Disc& region, double max_speed, Rng& rng);

/// Node i starts in living area (i mod number_of_living_areas). Nodes switch
/// to the random walk permanently on first entering the foraging disc;
/// foraging nodes still count as flock neighbors of the ones arriving.
std::vector<Trajectory> generate_tracks(const WorldConfig& world,
                                        const FlockingParams& flock,
                                        std::uint64_t seed);

/// Number of connected components of the range graph at one instant.
std::size_t count_components(std::span<const Vec2> positions, double range);

/// `t,node_id,x,y`, one row per node per second, 6 decimals.
void write_tracks_csv(std::ostream& os, std::span<const Trajectory> tracks);

}  // namespace grouptrack::movement
