#include "grouptrack/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace grouptrack::channel {

double PathLossParams::u() const {
  return std::numbers::ln10 / (5.0 * std::numbers::sqrt2 * eta);
}

double PathLossParams::beta() const { return std::numbers::ln10 / (10.0 * eta); }

void PathLossParams::validate() const {
  if (!(d0 > 0.0)) throw std::invalid_argument("channel: d0 must be > 0");
  if (!(eta > 0.0)) throw std::invalid_argument("channel: eta must be > 0");
  if (!std::isfinite(p0)) throw std::invalid_argument("channel: p0 must be finite");
}

double rssi_expected(double d, const PathLossParams& params) {
  if (!(d > 0.0)) throw std::invalid_argument("rssi_expected: distance must be > 0");
  return params.p0 - 10.0 * params.eta * std::log10(d / params.d0);
}

double sample_rssi(double d, double sigma_p, const PathLossParams& params, Rng& rng) {
  const double mean = rssi_expected(d, params);
  if (sigma_p == 0.0) return mean;
  std::normal_distribution<double> noise(0.0, sigma_p);
  return mean + noise(rng);
}

double invert_rssi(double p_tilde, const PathLossParams& params) {
  return params.d0 * std::pow(10.0, (params.p0 - p_tilde) / (10.0 * params.eta));
}

Vec2 sample_gps_fix(const Vec2& true_pos, double sigma_a, Rng& rng) {
  if (sigma_a == 0.0) return true_pos;
  std::normal_distribution<double> noise(0.0, sigma_a);
  const double nx = noise(rng);
  const double ny = noise(rng);
  return true_pos + Vec2(nx, ny);
}

double RssiRanger::estimate_distance(double true_distance, Rng& rng) const {
  // Collocated nodes still produce a finite reading at the reference distance.
  const double d = true_distance > 0.0 ? true_distance : params.d0;
  return invert_rssi(sample_rssi(d, sigma_p, params, rng), params);
}

}  // namespace grouptrack::channel
