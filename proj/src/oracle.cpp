#include "hypflow/oracle.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hypflow/errors.hpp"
#include "hypflow/geometry.hpp"

namespace hypflow::oracle {

namespace {

using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using Mat2 = Eigen::Matrix<Real, 2, 2>;

// Point on the hypersurface; psi rotates the azimuthal direction towards axis
// `axis` (an index >= 3 into omega), which spans the remaining rotational directions.
MinkowskiPoint point(const ProfileFunction& u, int n, Real theta, Real phi, int axis = 0,
                     Real psi = 0.0L) {
  const Real r = u(theta);
  MinkowskiPoint x = MinkowskiPoint::Zero(n + 2);
  const Real s = std::sinh(r);
  const Real st = std::sin(theta);
  x(0) = std::cosh(r);
  x(1) = s * std::cos(theta);
  x(2) = s * st * std::cos(phi) * std::cos(psi);
  x(3) = s * st * std::sin(phi) * std::cos(psi);
  if (axis > 0) x(axis + 1) = s * st * std::sin(psi);
  return x;
}

MinkowskiPoint lower(MinkowskiPoint x) {
  x(0) = -x(0);
  return x;
}

struct Frame {
  MinkowskiPoint x, x_theta, x_phi, nu;
  Real alignment;
};

Frame frame(const ProfileFunction& u, int n, Real theta, Real phi, Real h, bool flip) {
  Frame f;
  f.x = point(u, n, theta, phi);
  f.x_theta = (point(u, n, theta + h, phi) - point(u, n, theta - h, phi)) / (2 * h);
  f.x_phi = (point(u, n, theta, phi + h) - point(u, n, theta, phi - h)) / (2 * h);

  // nu is Minkowski-orthogonal to the position and to all n tangent directions.
  Mat constraints(n + 1, n + 2);
  constraints.row(0) = lower(f.x).transpose();
  constraints.row(1) = lower(f.x_theta).transpose();
  constraints.row(2) = lower(f.x_phi).transpose();
  for (int axis = 3; axis <= n; ++axis) {
    const MinkowskiPoint t =
        (point(u, n, theta, phi, axis, h) - point(u, n, theta, phi, axis, -h)) / (2 * h);
    constraints.row(axis) = lower(t).transpose();
  }
  Eigen::JacobiSVD<Mat> svd(constraints, Eigen::ComputeFullV);
  MinkowskiPoint nu = svd.matrixV().col(n + 1);
  nu /= std::sqrt(minkowski(nu, nu));

  const Real r = u(theta);
  // d/dr of (cosh r, sinh r omega).
  MinkowskiPoint radial(n + 2);
  radial(0) = std::sinh(r);
  radial.tail(n + 1) = f.x.tail(n + 1) * (std::cosh(r) / std::sinh(r));
  if (minkowski(nu, radial) < 0) nu = -nu;
  if (flip) nu = -nu;
  f.alignment = minkowski(nu, radial);
  f.nu = nu;
  return f;
}

}  // namespace

Real minkowski(const MinkowskiPoint& x, const MinkowskiPoint& y) {
  return -x(0) * y(0) + x.tail(x.size() - 1).dot(y.tail(y.size() - 1));
}

MinkowskiPoint embed(const ProfileFunction& u, int n, Real theta, Real phi) {
  if (n < 2) throw ContractError("embed: n must be >= 2");
  return point(u, n, theta, phi);
}

Real geodesic_distance(const MinkowskiPoint& x, const MinkowskiPoint& y) {
  return std::acosh(std::max(Real(1), -minkowski(x, y)));
}

FundamentalForms fd_fundamental_forms(const ProfileFunction& u, int n, double theta,
                                      double h_step, const OracleOptions& options) {
  if (n < 2) throw ContractError("fd_fundamental_forms: n must be >= 2");
  if (!(theta > kPoleExclusion && theta < std::numbers::pi - kPoleExclusion))
    throw ContractError("fd_fundamental_forms: theta = " + std::to_string(theta) +
                        " is within 0.01 of a pole; use the analytic pole limit");
  if (!(h_step >= 1e-5 && h_step <= 1e-3))
    throw ContractError("fd_fundamental_forms: h_step must be in [1e-5, 1e-3]");

  const Real h = h_step;
  const Real th = theta;
  const Real phi = options.phi;
  const bool flip = options.flip_orientation;
  const Frame c = frame(u, n, th, phi, h, flip);
  const MinkowskiPoint nu_theta =
      (frame(u, n, th + h, phi, h, flip).nu - frame(u, n, th - h, phi, h, flip).nu) / (2 * h);
  const MinkowskiPoint nu_phi =
      (frame(u, n, th, phi + h, h, flip).nu - frame(u, n, th, phi - h, h, flip).nu) / (2 * h);

  const MinkowskiPoint* dx[2] = {&c.x_theta, &c.x_phi};
  const MinkowskiPoint* dnu[2] = {&nu_theta, &nu_phi};
  Mat2 g, hh;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      g(i, j) = minkowski(*dx[i], *dx[j]);
      hh(i, j) = 0.5L * (minkowski(*dnu[i], *dx[j]) + minkowski(*dnu[j], *dx[i]));
    }

  Eigen::GeneralizedSelfAdjointEigenSolver<Mat2> es(hh, g);
  const auto& vecs = es.eigenvectors();
  // The eigenvector dominated by the theta component is the meridian direction.
  const int mer = std::abs(vecs(0, 0)) >= std::abs(vecs(0, 1)) ? 0 : 1;
  FundamentalForms out;
  out.g = g.cast<double>();
  out.h = hh.cast<double>();
  out.kappa_mer = static_cast<double>(es.eigenvalues()(mer));
  out.kappa_rot = static_cast<double>(es.eigenvalues()(1 - mer));
  out.radial_alignment = static_cast<double>(c.alignment);
  return out;
}

const std::vector<TestProfile>& test_profiles() {
  static const std::vector<TestProfile> profiles = [] {
    std::vector<TestProfile> p;
    p.push_back({"sphere", [](Real) { return Real(1); }, [](double) { return 0.0; },
                 [](double) { return 0.0; }});
    p.push_back({"sphere_small", [](Real) { return Real(0.6L); }, [](double) { return 0.0; },
                 [](double) { return 0.0; }});
    p.push_back({"perturbed", [](Real t) { return 1 + 0.05L * std::cos(2 * t); },
                 [](double t) { return -0.1 * std::sin(2 * t); },
                 [](double t) { return -0.2 * std::cos(2 * t); }});
    p.push_back({"two_mode",
                 [](Real t) { return 0.8L + 0.03L * std::cos(2 * t) + 0.01L * std::cos(4 * t); },
                 [](double t) { return -0.06 * std::sin(2 * t) - 0.04 * std::sin(4 * t); },
                 [](double t) { return -0.12 * std::cos(2 * t) - 0.16 * std::cos(4 * t); }});
    p.push_back({"mode3", [](Real t) { return 1.2L + 0.04L * std::cos(3 * t); },
                 [](double t) { return -0.12 * std::sin(3 * t); },
                 [](double t) { return -0.36 * std::cos(3 * t); }});
    return p;
  }();
  return profiles;
}

const TestProfile& test_profile(const std::string& name) {
  for (const auto& p : test_profiles())
    if (p.name == name) return p;
  std::string known;
  for (const auto& p : test_profiles()) known += (known.empty() ? "" : ", ") + p.name;
  throw ConfigError("unknown test profile '" + name + "' (known: " + known + ")");
}

CrossCheck cross_check(const TestProfile& profile, int n, int M, double h_step,
                       const OracleOptions& options) {
  geometry::AxisymmetricProfile grid;
  grid.n = n;
  grid.u.resize(M + 1);
  for (int m = 0; m <= M; ++m) grid.u[m] = static_cast<double>(profile.u(grid.theta(m)));
  const auto k = geometry::principal_curvatures(grid);

  CrossCheck out;
  for (int m = 0; m <= M; ++m) {
    const double theta = grid.theta(m);
    if (!(theta > kPoleExclusion && theta < std::numbers::pi - kPoleExclusion)) continue;
    const auto ff = fd_fundamental_forms(profile.u, n, theta, h_step, options);
    const double e = std::max(std::abs(k.meridian[m] - ff.kappa_mer) / std::abs(ff.kappa_mer),
                              std::abs(k.rotational[m] - ff.kappa_rot) / std::abs(ff.kappa_rot));
    ++out.nodes_compared;
    if (e > out.max_relative_discrepancy) {
      out.max_relative_discrepancy = e;
      out.worst_theta = theta;
    }
  }
  return out;
}

}  // namespace hypflow::oracle
