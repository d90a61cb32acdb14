#include "grouptrack/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>

#include "grouptrack/multilat.hpp"

namespace grouptrack::oracle {
namespace {

constexpr double kVarianceTolerance = 0.02;  // relative
constexpr double kMeanTolerance = 0.01;      // relative
constexpr double kStandardErrors = 5.0;

// beta from the dB-to-log conversion, derived here independently of channel.
double ln_per_db(double eta) { return std::numbers::ln10 / (10.0 * eta); }

// Variance of samples shifted by the first one, so constant input gives an
// exact zero.
struct Moments {
  double shift = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;

  void add(double x) {
    if (n == 0) shift = x;
    const double y = x - shift;
    sum += y;
    sum_sq += y * y;
    ++n;
  }
  double mean() const { return shift + sum / static_cast<double>(n); }
  double variance() const {
    const double nd = static_cast<double>(n);
    return n < 2 ? 0.0 : std::max(0.0, (sum_sq - sum * sum / nd) / (nd - 1.0));
  }
};

std::vector<Vec2> circle(const Vec2& center, double radius, int count, double phase = 0.0) {
  std::vector<Vec2> out;
  for (int k = 0; k < count; ++k) {
    const double a = phase + 2.0 * std::numbers::pi * k / count;
    out.push_back(center + radius * Vec2(std::cos(a), std::sin(a)));
  }
  return out;
}

std::string label(const char* fmt, double a, double b = 0.0) {
  char buf[96];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

OracleCheck make_check(std::string name, double closed, double measured, double tolerance) {
  OracleCheck c{std::move(name), closed, measured, tolerance, false};
  c.passed = std::abs(measured - closed) <= tolerance;
  return c;
}

}  // namespace

bool OracleReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return !checks.empty();
}

const std::vector<Geometry>& reference_geometries() {
  static const std::vector<Geometry> g = {
      {"hexagon-centered", {0.0, 0.0}, circle({0.0, 0.0}, 100.0, 6)},
      {"hexagon-offset", {40.0, 0.0}, circle({0.0, 0.0}, 100.0, 6, 0.3)},
      {"square-plus-two",
       {30.0, 50.0},
       {{0, 0}, {80, 0}, {80, 80}, {0, 80}, {40, -30}, {120, 40}}},
      {"scattered",
       {10.0, 10.0},
       {{150, 10}, {0, 0}, {60, 90}, {-50, 40}, {20, -70}, {100, -40}}},
      {"far-from-origin", {510.0, 495.0}, circle({500.0, 500.0}, 20.0, 6, 0.1)},
  };
  return g;
}

Geometry bias_geometry() { return {"bias-circle", {40.0, 0.0}, circle({0.0, 0.0}, 100.0, 6)}; }

double sampled_range_squared_variance(double d, double sigma_p, double eta, std::size_t samples,
                                      Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  const double two_beta = 2.0 * ln_per_db(eta);
  Moments m;
  for (std::size_t i = 0; i < samples; ++i) m.add(d * d * std::exp(two_beta * sigma_p * z(rng)));
  return m.variance();
}

double sampled_norm_squared_variance(const Vec2& p, double sigma_a, std::size_t samples,
                                     Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Moments m;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = p.x() + sigma_a * z(rng);
    const double y = p.y() + sigma_a * z(rng);
    m.add(x * x + y * y);
  }
  return m.variance();
}

double sampled_range_mean(double d, double sigma_p, double eta, std::size_t samples, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  const double beta = ln_per_db(eta);
  Moments m;
  for (std::size_t i = 0; i < samples; ++i) m.add(d * std::exp(beta * sigma_p * z(rng)));
  return m.mean();
}

double sampled_range_squared_mean(double d, double sigma_p, double eta, std::size_t samples,
                                  Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  const double two_beta = 2.0 * ln_per_db(eta);
  Moments m;
  for (std::size_t i = 0; i < samples; ++i) m.add(d * d * std::exp(two_beta * sigma_p * z(rng)));
  return m.mean();
}

PositionBias position_bias(const Geometry& geometry, double sigma_p, double sigma_a,
                           const channel::PathLossParams& params, std::size_t trials, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  const double beta = ln_per_db(params.eta);
  std::vector<multilat::AnchorObservation> obs(geometry.anchors.size());
  Vec2 sum_wlsr = Vec2::Zero();
  Vec2 sum_wlsrp = Vec2::Zero();
  std::size_t used = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t k = 0; k < obs.size(); ++k) {
      const Vec2& p = geometry.anchors[k];
      const double d = (p - geometry.blind).norm();
      obs[k].pos_tilde = p + sigma_a * Vec2(z(rng), z(rng));
      obs[k].d_tilde = d * std::exp(beta * sigma_p * z(rng));
      obs[k].sigma_a = sigma_a;
      obs[k].sigma_p = sigma_p;
    }
    try {
      const Vec2 a = multilat::estimate_position(obs, params, multilat::Variant::kWlsr).w_hat;
      const Vec2 b = multilat::estimate_position(obs, params, multilat::Variant::kWlsrp).w_hat;
      sum_wlsr += a;
      sum_wlsrp += b;
      ++used;
    } catch (const multilat::DegenerateGeometry&) {
    }
  }
  PositionBias out;
  out.truth = geometry.blind;
  out.mean_wlsr = sum_wlsr / static_cast<double>(used);
  out.mean_wlsrp = sum_wlsrp / static_cast<double>(used);
  out.bias_wlsr = (out.mean_wlsr - out.truth).norm();
  out.bias_wlsrp = (out.mean_wlsrp - out.truth).norm();
  return out;
}

OracleReport run_oracles(const OracleOptions& options, const channel::PathLossParams& params) {
  params.validate();
  OracleReport report;
  Rng rng = make_rng(options.seed, Stream::kOracle);
  const double eta = params.eta;
  const std::size_t n = options.samples;

  for (const auto& g : reference_geometries()) {
    const Vec2& ref = g.anchors.front();
    const double d = (ref - g.blind).norm();
    for (double sp : options.sigma_p_levels) {
      const double closed = multilat::range_squared_variance(d, sp, params);
      const double measured = sampled_range_squared_variance(d, sp, eta, n, rng);
      report.checks.push_back(make_check(g.name + label(" Var(d~^2) sigma_p=%g dB", sp), closed,
                                         measured, kVarianceTolerance * closed));
    }
    for (double sa : options.sigma_a_levels) {
      const double closed = multilat::norm_squared_variance(ref, sa);
      const double measured = sampled_norm_squared_variance(ref, sa, n, rng);
      report.checks.push_back(make_check(g.name + label(" Var(k~) sigma_a=%g m", sa), closed,
                                         measured, kVarianceTolerance * closed));
    }
  }

  const double d = 50.0;
  for (double sp : options.sigma_p_levels) {
    const double beta = ln_per_db(eta);
    const double closed_mean = d * std::exp(0.5 * beta * beta * sp * sp);
    report.checks.push_back(make_check(label("E[d~] log-normal mean sigma_p=%g dB", sp),
                                       closed_mean, sampled_range_mean(d, sp, eta, n, rng),
                                       kMeanTolerance * closed_mean));

    // Second-order bias of d~^2 against the sampled mean. The tolerance
    // allows the third-order remainder plus sampling error.
    const double x = params.u() * params.u() * sp * sp;
    const double coef = multilat::bias_coefficient(options.u_scale * params.u(), sp);
    const double closed = d * d * (1.0 + coef);
    const double remainder = d * d * std::abs(std::expm1(x) - x - 0.5 * x * x);
    const double sd = d * d * std::sqrt(std::exp(2.0 * x) * std::expm1(2.0 * x));
    const double tol = remainder + kStandardErrors * sd / std::sqrt(static_cast<double>(n));
    report.checks.push_back(make_check(label("E[d~^2] bias correction sigma_p=%g dB", sp), closed,
                                       sampled_range_squared_mean(d, sp, eta, n, rng), tol));
  }

  if (options.include_position_bias) {
    const PositionBias pb = position_bias(bias_geometry(), 3.0, 10.0, params,
                                          options.position_trials, rng);
    OracleCheck c{"position bias |mean WLSRP - truth| < |mean WLSR - truth|", pb.bias_wlsr,
                  pb.bias_wlsrp, 0.0, pb.bias_wlsrp < pb.bias_wlsr};
    report.checks.push_back(c);
  }
  return report;
}

void print_report(std::ostream& os, const OracleReport& report) {
  char buf[256];
  for (const auto& c : report.checks) {
    std::snprintf(buf, sizeof buf, "%s  %-58s closed=%.6g measured=%.6g tol=%.3g\n",
                  c.passed ? "PASS" : "FAIL", c.name.c_str(), c.closed_form, c.measured,
                  c.tolerance);
    os << buf;
  }
}

}  // namespace grouptrack::oracle
