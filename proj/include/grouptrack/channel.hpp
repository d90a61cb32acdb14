#pragma once

// Perturbed GPS fixes and log-normal shadowed RSSI ranging.

#include "grouptrack/rng.hpp"
#include "grouptrack/types.hpp"

namespace grouptrack::channel {

struct PathLossParams {
  double d0 = 1.0;     // reference distance, m
  double p0 = -33.44;  // received power at d0, dBm
  double eta = 3.567;  // path-loss exponent

  /// ln(10) / (5 sqrt(2) eta). Always derived from eta.
  double u() const;
  /// ln(10) / (10 eta): d_tilde = d * exp(beta * n) for RSSI noise n in dB.
  double beta() const;
  void validate() const;
};

struct NoiseProfile {
  double sigma_a = 0.0;  // anchor position noise std, m (per axis)
  double sigma_p = 0.0;  // RSSI noise std, dB
};

/// p0 - 10 eta log10(d / d0). Throws std::invalid_argument for d <= 0.
double rssi_expected(double d, const PathLossParams& params);

double sample_rssi(double d, double sigma_p, const PathLossParams& params, Rng& rng);

/// d0 * 10^((p0 - p) / (10 eta)), the inverse of rssi_expected.
double invert_rssi(double p_tilde, const PathLossParams& params);

Vec2 sample_gps_fix(const Vec2& true_pos, double sigma_a, Rng& rng);

/// Draws a fresh RSSI sample over the true distance and inverts it.
struct RssiRanger {
  PathLossParams params;
  double sigma_p = 0.0;

  double estimate_distance(double true_distance, Rng& rng) const;
};

}  // namespace grouptrack::channel
