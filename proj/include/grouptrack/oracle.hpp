#pragma once

// Monte-Carlo cross-checks of the closed-form noise moments used by the
// multilateration weights and bias correction. Samples are drawn from the raw
// noise models directly, not through the channel module.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "grouptrack/channel.hpp"
#include "grouptrack/types.hpp"

namespace grouptrack::oracle {

struct OracleOptions {
  std::size_t samples = 1'000'000;
  std::size_t position_trials = 100'000;
  std::uint64_t seed = 1;
  // Test hook: multiplies u inside the bias correction under test.
  double u_scale = 1.0;
  std::vector<double> sigma_p_levels{1.0, 3.0};
  std::vector<double> sigma_a_levels{1.0, 5.0, 10.0};
  bool include_position_bias = true;
};

struct OracleCheck {
  std::string name;
  double closed_form = 0.0;
  double measured = 0.0;
  double tolerance = 0.0;  // absolute bound on |measured - closed_form|
  bool passed = false;
};

struct OracleReport {
  std::vector<OracleCheck> checks;
  bool all_passed() const;
};

/// Blind node at the origin, anchors around it; five fixed layouts.
struct Geometry {
  std::string name;
  Vec2 blind;
  std::vector<Vec2> anchors;
};
const std::vector<Geometry>& reference_geometries();

/// Six anchors on a 100 m circle, blind node 40 m off center.
Geometry bias_geometry();

/// Sample variance of d^2 exp(2 beta n), n ~ N(0, sigma_p^2).
double sampled_range_squared_variance(double d, double sigma_p, double eta, std::size_t samples,
                                      Rng& rng);
/// Sample variance of |p + e|^2, e ~ N(0, sigma_a^2 I).
double sampled_norm_squared_variance(const Vec2& p, double sigma_a, std::size_t samples, Rng& rng);
/// Sample mean of d exp(beta n).
double sampled_range_mean(double d, double sigma_p, double eta, std::size_t samples, Rng& rng);
/// Sample mean of d^2 exp(2 beta n).
double sampled_range_squared_mean(double d, double sigma_p, double eta, std::size_t samples,
                                  Rng& rng);

struct PositionBias {
  Vec2 truth;
  Vec2 mean_wlsr;
  Vec2 mean_wlsrp;
  double bias_wlsr = 0.0;   // |mean - truth|
  double bias_wlsrp = 0.0;
};

/// Mean WLSR and WLSRP estimates over `trials` independent noise draws.
PositionBias position_bias(const Geometry& geometry, double sigma_p, double sigma_a,
                           const channel::PathLossParams& params, std::size_t trials, Rng& rng);

OracleReport run_oracles(const OracleOptions& options, const channel::PathLossParams& params);

void print_report(std::ostream& os, const OracleReport& report);

}  // namespace grouptrack::oracle
