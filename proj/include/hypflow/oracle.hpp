#pragma once

// Brute-force check of the graph curvature formulas: embed the hypersurface in the
// hyperboloid model of H^{n+1} inside R^{n+1,1} and difference the embedding.
// Everything runs in long double so roundoff stays far below the differencing error
// at the step sizes in use.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hypflow::oracle {

using Real = long double;
using MinkowskiPoint = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using ProfileFunction = std::function<Real(Real)>;

/// -x0 y0 + sum x_i y_i.
Real minkowski(const MinkowskiPoint& x, const MinkowskiPoint& y);

/// (cosh u, sinh u omega) with omega = (cos theta, sin theta cos phi, sin theta sin phi,
/// 0, ..., 0) in S^n. Result has n + 2 coordinates.
MinkowskiPoint embed(const ProfileFunction& u, int n, Real theta, Real phi);

/// Hyperbolic distance arccosh(-<x, y>).
Real geodesic_distance(const MinkowskiPoint& x, const MinkowskiPoint& y);

struct FundamentalForms {
  Eigen::Matrix2d g;  // in (theta, phi)
  Eigen::Matrix2d h;
  double kappa_mer = 0.0;
  double kappa_rot = 0.0;
  double radial_alignment = 0.0;  // <nu, d/dr>, positive for the outward normal
};

struct OracleOptions {
  Real phi = 0.0L;                 // azimuth of the sampled S^{n-1} direction
  bool flip_orientation = false;   // fault injection: inward normal
};

inline constexpr double kPoleExclusion = 0.01;

/// Throws ContractError unless theta is in (0.01, pi - 0.01) and h_step in [1e-5, 1e-3],
/// or if n < 2.
FundamentalForms fd_fundamental_forms(const ProfileFunction& u, int n, double theta,
                                      double h_step, const OracleOptions& options = {});

/// Closed-form profiles for cross-validation; derivatives are exact.
struct TestProfile {
  std::string name;
  ProfileFunction u;
  std::function<double(double)> du;
  std::function<double(double)> ddu;
};

/// sphere, sphere_small, perturbed, two_mode, mode3.
const std::vector<TestProfile>& test_profiles();
/// Throws ConfigError for unknown names.
const TestProfile& test_profile(const std::string& name);

struct CrossCheck {
  double max_relative_discrepancy = 0.0;
  double worst_theta = 0.0;
  int nodes_compared = 0;
};

/// Samples the profile on M + 1 grid nodes, runs geometry::principal_curvatures, and compares
/// both curvatures with the oracle at every node outside the pole exclusion zone.
CrossCheck cross_check(const TestProfile& profile, int n, int M, double h_step,
                       const OracleOptions& options = {});

}  // namespace hypflow::oracle
