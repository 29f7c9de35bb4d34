#pragma once

// Induced geometry of an axisymmetric radial graph r = u(theta) over S^n in the
// warped-product model dr^2 + sinh^2 r g_{S^n} of hyperbolic space.

#include <span>
#include <vector>

#include "hypflow/symfunc.hpp"

namespace hypflow::geometry {

inline constexpr int kDefaultStencilOrder = 4;
inline constexpr int kMinGridIntervals = 8;

/// u on the uniform grid theta_m = m pi / M, m = 0..M.
struct AxisymmetricProfile {
  int n = 3;
  std::vector<double> u;
  double t = 0.0;

  int intervals() const noexcept { return static_cast<int>(u.size()) - 1; }
  double dtheta() const noexcept;
  double theta(int m) const noexcept;
};

/// Throws ConfigError if n is outside [2, kMaxDimension] or M < 8, DomainError if some
/// u is nonpositive or not finite.
void validate(const AxisymmetricProfile& profile);

struct GridDerivatives {
  std::vector<double> first;
  std::vector<double> second;
};

/// Central differences of an even grid function on [0, pi]. Ghost nodes come from the
/// reflections f(-theta) = f(theta) and f(pi + theta) = f(pi - theta), so the first
/// derivative is exactly zero at both poles. order is 2 or 4.
GridDerivatives grid_derivatives(std::span<const double> f, int order = kDefaultStencilOrder);
GridDerivatives derivatives_on_grid(const AxisymmetricProfile& profile,
                                    int order = kDefaultStencilOrder);

/// Pointwise closed forms from u, u', u''. At a pole (u' = 0) both curvatures take the
/// rotational limit coth u - u''/sinh^2 u.
struct LocalGeometry {
  double v;
  double kappa_mer;
  double kappa_rot;
  double chi;
};
LocalGeometry local_geometry(double u, double du, double ddu, double theta, bool pole);

std::vector<double> graph_speed_v(const AxisymmetricProfile& profile,
                                  int order = kDefaultStencilOrder);

struct PrincipalCurvatures {
  std::vector<double> meridian;    // multiplicity 1
  std::vector<double> rotational;  // multiplicity n - 1
};
PrincipalCurvatures principal_curvatures(const AxisymmetricProfile& profile,
                                         int order = kDefaultStencilOrder);

std::vector<double> support_function(const AxisymmetricProfile& profile,
                                     int order = kDefaultStencilOrder);

struct GeometryCache {
  int n = 0;
  int stencil_order = kDefaultStencilOrder;
  double dtheta = 0.0;
  std::vector<double> theta, u, du, ddu;
  std::vector<double> v, kappa_mer, kappa_rot, chi;
  std::vector<double> f, fdot_mer, fdot_rot;  // fdot_rot is dF/dkappa_j for one rotational j
  std::vector<double> norm_a2;                // kappa_mer^2 + (n-1) kappa_rot^2
  std::vector<double> metric_a;               // g(d_theta, d_theta) = sinh^2 u + u'^2
  double min_pair_product = 0.0;
  bool positive_sectional = false;            // min_pair_product > 1

  int size() const noexcept { return static_cast<int>(u.size()); }
};

/// Throws DomainError if a principal curvature leaves the positive cone, plus the
/// errors of validate().
GeometryCache build_cache(const AxisymmetricProfile& profile,
                          const symfunc::CurvatureFunctionSpec& spec,
                          int order = kDefaultStencilOrder);

/// Smallest pair product among the principal values at node m. With
/// two_smallest = false only the mixed pair kappa_mer kappa_rot is used.
double pair_product(const GeometryCache& cache, int m, bool two_smallest = true);

/// min over the grid of pair_product - 1 - epsilon F^2.
double sectional_margin(const GeometryCache& cache, double epsilon, bool two_smallest = true);

/// Diagonal of the covariant Hessian of an axisymmetric scalar in the orthonormal
/// principal frame: e1 along the meridian, e2 any rotational direction.
struct CovariantHessian {
  std::vector<double> e1e1;
  std::vector<double> e2e2;
};
/// Throws ContractError if field has the wrong size.
CovariantHessian covariant_hessian(const GeometryCache& cache, std::span<const double> field);

/// Fdot^{kl} nabla_k nabla_l F. Throws ContractError if cache and profile disagree in size.
std::vector<double> covariant_hessian_F(const AxisymmetricProfile& profile,
                                        const GeometryCache& cache);

}  // namespace hypflow::geometry
