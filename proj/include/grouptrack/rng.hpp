#pragma once

#include <cstdint>
#include <random>

namespace grouptrack {

using Rng = std::mt19937_64;

/// Independent random streams fanned out from one master seed. Every
/// algorithm variant draws movement from the same stream, so all variants
/// see the same world.
enum class Stream : std::uint64_t {
  kMovement = 1,
  kChannel = 2,
  kProtocol = 3,
  kTracker = 4,
  kOracle = 5,
};

/// SplitMix64 finalizer over (master, stream, index). Counter-based, so
/// stream seeds do not depend on how much any other stream consumed.
std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                          std::uint64_t index = 0);

Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index = 0);

}  // namespace grouptrack
