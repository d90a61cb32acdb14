#include "grouptrack/multilat.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace grouptrack::multilat {
namespace {

constexpr double kRegularization = 1e-9;
// lambda_min / lambda_max of the 2x2 normal matrix below which the anchors
// are treated as collinear.
constexpr double kDegenerateRatio = 1e-12;

void require_anchors(std::span<const AnchorObservation> anchors) {
  if (anchors.size() < 3) throw InsufficientAnchors(anchors.size());
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::kWlsr: return "WLSR";
    case Method::kWlsrp: return "WLSRP";
    case Method::kNearestAnchor: return "NearestAnchor";
    case Method::kGps: return "GPS";
    case Method::kBorrowed: return "Borrowed";
    case Method::kHeld: return "Held";
  }
  return "?";
}

InsufficientAnchors::InsufficientAnchors(std::size_t n)
    : std::invalid_argument("multilateration needs at least 3 anchors, got " +
                            std::to_string(n)) {}

DegenerateGeometry::DegenerateGeometry()
    : std::runtime_error("degenerate anchor geometry: normal matrix is singular") {}

double range_squared_variance(double d, double sigma_p,
                              const channel::PathLossParams& params) {
  const double u = params.u();
  const double x = u * u * sigma_p * sigma_p;
  const double d2 = d * d;
  // e^{4x} - e^{2x} = e^{2x} (e^{2x} - 1); expm1 keeps small sigma exact.
  return d2 * d2 * std::exp(2.0 * x) * std::expm1(2.0 * x);
}

double norm_squared_variance(const Vec2& pos, double sigma_a) {
  const double s2 = sigma_a * sigma_a;
  return 4.0 * s2 * pos.squaredNorm() + 4.0 * s2 * s2;
}

double bias_coefficient(double u, double sigma_p) {
  const double x = u * u * sigma_p * sigma_p;
  return x + 0.5 * x * x;
}

Eigen::VectorXd bias_vector(std::span<const AnchorObservation> anchors, double u) {
  require_anchors(anchors);
  const auto& ref = anchors.front();
  const double ref_d2 = ref.d_tilde * ref.d_tilde;
  Eigen::VectorXd c(static_cast<Eigen::Index>(anchors.size() - 1));
  for (std::size_t j = 1; j < anchors.size(); ++j) {
    const auto& a = anchors[j];
    c(static_cast<Eigen::Index>(j - 1)) =
        bias_coefficient(u, a.sigma_p) * (ref_d2 - a.d_tilde * a.d_tilde) +
        2.0 * (a.sigma_a * a.sigma_a - ref.sigma_a * ref.sigma_a);
  }
  return c;
}

Eigen::MatrixXd wlsr_covariance(std::span<const AnchorObservation> anchors,
                                const channel::PathLossParams& params) {
  require_anchors(anchors);
  const auto m = static_cast<Eigen::Index>(anchors.size() - 1);
  const double shared = range_squared_variance(anchors[0].d_tilde, anchors[0].sigma_p, params);
  Eigen::MatrixXd S = Eigen::MatrixXd::Constant(m, m, shared);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& a = anchors[static_cast<std::size_t>(i) + 1];
    S(i, i) = shared + range_squared_variance(a.d_tilde, a.sigma_p, params);
  }
  return S;
}

Eigen::MatrixXd wlsrp_covariance(std::span<const AnchorObservation> anchors,
                                 const channel::PathLossParams& params) {
  require_anchors(anchors);
  const auto m = static_cast<Eigen::Index>(anchors.size() - 1);
  const auto& ref = anchors[0];
  const double shared = range_squared_variance(ref.d_tilde, ref.sigma_p, params) +
                        norm_squared_variance(ref.pos_tilde, ref.sigma_a);
  Eigen::MatrixXd S = Eigen::MatrixXd::Constant(m, m, shared);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& a = anchors[static_cast<std::size_t>(i) + 1];
    S(i, i) = shared + range_squared_variance(a.d_tilde, a.sigma_p, params) +
              norm_squared_variance(a.pos_tilde, a.sigma_a);
  }
  return S;
}

LinearSystem build_system(std::span<const AnchorObservation> anchors,
                          const channel::PathLossParams& params, Variant variant) {
  require_anchors(anchors);
  const auto n = static_cast<Eigen::Index>(anchors.size());
  LinearSystem sys;
  sys.variant = variant;
  sys.k_tilde.resize(n);
  for (Eigen::Index j = 0; j < n; ++j)
    sys.k_tilde(j) = anchors[static_cast<std::size_t>(j)].pos_tilde.squaredNorm();

  const auto& ref = anchors[0];
  sys.A.resize(n - 1, 2);
  sys.b.resize(n - 1);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const auto& a = anchors[static_cast<std::size_t>(i) + 1];
    sys.A.row(i) = (a.pos_tilde - ref.pos_tilde).transpose();
    sys.b(i) = ref.d_tilde * ref.d_tilde - a.d_tilde * a.d_tilde + sys.k_tilde(i + 1) -
               sys.k_tilde(0);
  }

  if (variant == Variant::kWlsr) {
    sys.c = Eigen::VectorXd::Zero(n - 1);
    sys.S = wlsr_covariance(anchors, params);
  } else {
    sys.c = bias_vector(anchors, params.u());
    sys.S = wlsrp_covariance(anchors, params);
  }
  return sys;
}

PositionEstimate solve(const LinearSystem& system) {
  const Eigen::Index m = system.S.rows();
  const double trace = system.S.trace();
  const double eps = trace > 0.0 ? kRegularization * trace / static_cast<double>(m)
                                 : kRegularization;
  Eigen::MatrixXd S = system.S;
  S.diagonal().array() += eps;

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  const Eigen::MatrixX2d SiA = ldlt.solve(system.A);
  const Eigen::VectorXd Sib = ldlt.solve(system.b - system.c);
  const Eigen::Matrix2d normal = system.A.transpose() * SiA;
  const Eigen::Vector2d rhs = system.A.transpose() * Sib;

  const double tr = normal.trace();
  const double det = normal.determinant();
  if (!(tr > 0.0) || !(det > kDegenerateRatio * tr * tr) || !std::isfinite(det))
    throw DegenerateGeometry();

  PositionEstimate est;
  est.w_hat = 0.5 * normal.inverse() * rhs;
  est.method = system.variant == Variant::kWlsr ? Method::kWlsr : Method::kWlsrp;
  if (!est.w_hat.allFinite()) throw DegenerateGeometry();
  return est;
}

PositionEstimate estimate_position(std::span<const AnchorObservation> anchors,
                                   const channel::PathLossParams& params, Variant variant,
                                   const std::optional<Vec2>& frame_origin) {
  require_anchors(anchors);
  Vec2 origin = Vec2::Zero();
  if (frame_origin) {
    origin = *frame_origin;
  } else {
    for (const auto& a : anchors) origin += a.pos_tilde;
    origin /= static_cast<double>(anchors.size());
  }

  std::vector<AnchorObservation> local(anchors.begin(), anchors.end());
  for (auto& a : local) a.pos_tilde -= origin;

  PositionEstimate est = solve(build_system(local, params, variant));
  est.w_hat += origin;
  return est;
}

}  // namespace grouptrack::multilat
