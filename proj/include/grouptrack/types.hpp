#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace grouptrack {

using Vec2 = Eigen::Vector2d;
using NodeId = std::uint32_t;

/// Closed disc in the plane, used for living/foraging regions.
struct Disc {
  Vec2 center{0.0, 0.0};
  double radius = 0.0;

  bool contains(const Vec2& p) const { return (p - center).norm() <= radius; }
};

}  // namespace grouptrack
