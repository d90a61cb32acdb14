#pragma once

// Closed-form weighted least-squares multilateration from perturbed anchor
// positions and RSSI distance estimates.
//
// With anchors p_1..p_N and distance estimates d_1..d_N, the linearized
// system is 2 A w = b where row i (anchor i+1 against reference anchor 1) is
//   A_i = p_{i+1} - p_1
//   b_i = d_1^2 - d_{i+1}^2 + k_{i+1} - k_1,   k_j = |p_j|^2
// and the estimate is w = 1/2 (A' S^-1 A)^-1 A' S^-1 (b - c). WLSR models RSSI
// noise only and uses c = 0; WLSRP adds anchor-position noise to S and
// subtracts the bias vector c.

#include <optional>
#include <span>
#include <stdexcept>

#include <Eigen/Core>

#include "grouptrack/channel.hpp"
#include "grouptrack/types.hpp"

namespace grouptrack::multilat {

struct AnchorObservation {
  Vec2 pos_tilde{0.0, 0.0};  // perturbed anchor position
  double d_tilde = 0.0;      // RSSI distance estimate
  double sigma_a = 0.0;
  double sigma_p = 0.0;
};

enum class Variant { kWlsr, kWlsrp };

enum class Method { kWlsr, kWlsrp, kNearestAnchor, kGps, kBorrowed, kHeld };

const char* to_string(Method m);

struct PositionEstimate {
  Vec2 w_hat{0.0, 0.0};
  Method method = Method::kGps;
};

struct LinearSystem {
  Eigen::MatrixX2d A;
  Eigen::VectorXd b;
  Eigen::MatrixXd S;
  Eigen::VectorXd c;
  Eigen::VectorXd k_tilde;
  Variant variant = Variant::kWlsr;
};

class InsufficientAnchors : public std::invalid_argument {
 public:
  explicit InsufficientAnchors(std::size_t n);
};

class DegenerateGeometry : public std::runtime_error {
 public:
  DegenerateGeometry();
};

/// Var(d_tilde^2) = d^4 (e^{4 u^2 s^2} - e^{2 u^2 s^2}) for log-normal ranging.
double range_squared_variance(double d, double sigma_p, const channel::PathLossParams& params);

/// Var(k_tilde) = 4 s^2 (x^2 + y^2) + 4 s^4 for Gaussian per-axis noise s.
double norm_squared_variance(const Vec2& pos, double sigma_a);

/// u^2 s^2 + u^4 s^4 / 2: relative bias of d_tilde^2 to second order.
double bias_coefficient(double u, double sigma_p);

/// c_i = coef(sigma_p_i) (d_1^2 - d_i^2) + 2 (sigma_a_i^2 - sigma_a_1^2), one
/// entry per non-reference anchor, with d_tilde plugged in for d. `u` is
/// normally params.u(); the oracle suite overrides it as a negative control.
Eigen::VectorXd bias_vector(std::span<const AnchorObservation> anchors, double u);

Eigen::MatrixXd wlsr_covariance(std::span<const AnchorObservation> anchors,
                                const channel::PathLossParams& params);

Eigen::MatrixXd wlsrp_covariance(std::span<const AnchorObservation> anchors,
                                 const channel::PathLossParams& params);

/// The first anchor is the reference. Throws InsufficientAnchors for N < 3.
LinearSystem build_system(std::span<const AnchorObservation> anchors,
                          const channel::PathLossParams& params, Variant variant);

/// Adds 1e-9 * trace(S)/(N-1) (or 1e-9 when S is zero) to the diagonal before
/// inverting. Throws DegenerateGeometry when A' S^-1 A is singular.
PositionEstimate solve(const LinearSystem& system);

/// build_system + solve in a local frame, translated back afterwards.
/// Var(k_tilde) grows with |p|^2 while the residual it stands for grows with
/// |p - w|^2, so the frame origin should sit near the blind node: pass a
/// prior guess such as the node's last estimate, or get the anchor centroid.
PositionEstimate estimate_position(std::span<const AnchorObservation> anchors,
                                   const channel::PathLossParams& params, Variant variant,
                                   const std::optional<Vec2>& origin = std::nullopt);

}  // namespace grouptrack::multilat
