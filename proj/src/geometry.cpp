#include "hypflow/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "hypflow/errors.hpp"

namespace hypflow::geometry {

double AxisymmetricProfile::dtheta() const noexcept { return std::numbers::pi / intervals(); }

double AxisymmetricProfile::theta(int m) const noexcept {
  // Exact endpoints so cos/sin at the poles carry no rounding.
  if (m == intervals()) return std::numbers::pi;
  return m * dtheta();
}

void validate(const AxisymmetricProfile& profile) {
  if (profile.n < 2 || profile.n > symfunc::kMaxDimension)
    throw ConfigError("hypersurface dimension must be in [2, " +
                      std::to_string(symfunc::kMaxDimension) + "], got " +
                      std::to_string(profile.n));
  if (profile.intervals() < kMinGridIntervals)
    throw ConfigError("grid too coarse: need M >= " + std::to_string(kMinGridIntervals) +
                      " intervals, got " + std::to_string(profile.intervals()));
  for (std::size_t m = 0; m < profile.u.size(); ++m) {
    const double u = profile.u[m];
    if (!(u > 0.0) || !std::isfinite(u))
      throw DomainError("radial graph must be positive and finite, u[" + std::to_string(m) +
                        "] = " + std::to_string(u));
  }
}

GridDerivatives grid_derivatives(std::span<const double> f, int order) {
  const int M = static_cast<int>(f.size()) - 1;
  if (M < kMinGridIntervals)
    throw ConfigError("grid too coarse: need M >= " + std::to_string(kMinGridIntervals) +
                      " intervals, got " + std::to_string(M));
  if (order != 2 && order != 4)
    throw ConfigError("stencil order must be 2 or 4, got " + std::to_string(order));
  const double h = std::numbers::pi / M;
  auto at = [&](int j) {
    if (j < 0) j = -j;
    if (j > M) j = 2 * M - j;
    return f[j];
  };
  GridDerivatives d;
  d.first.resize(f.size());
  d.second.resize(f.size());
  for (int m = 0; m <= M; ++m) {
    // Grouped as symmetric differences so constants give exact zeros.
    const double d1 = at(m + 1) - at(m - 1);
    const double s1 = (at(m + 1) + at(m - 1)) - 2.0 * f[m];
    if (order == 2) {
      d.first[m] = d1 / (2.0 * h);
      d.second[m] = s1 / (h * h);
    } else {
      const double d2 = at(m + 2) - at(m - 2);
      const double s2 = (at(m + 2) + at(m - 2)) - 2.0 * f[m];
      d.first[m] = (8.0 * d1 - d2) / (12.0 * h);
      d.second[m] = (16.0 * s1 - s2) / (12.0 * h * h);
    }
  }
  return d;
}

GridDerivatives derivatives_on_grid(const AxisymmetricProfile& profile, int order) {
  validate(profile);
  return grid_derivatives(profile.u, order);
}

namespace {

bool is_pole(int m, int M) { return m == 0 || m == M; }

struct SinhCosh {
  double s, c;
};

// One expm1 instead of separate sinh and cosh calls; accurate for small u as well.
SinhCosh sinh_cosh(double u) {
  const double em1 = std::expm1(u);
  const double e = em1 + 1.0;
  const double s = 0.5 * em1 * (1.0 + 1.0 / e);
  return {s, s + 1.0 / e};
}

LocalGeometry local_geometry_cot(double u, double du, double ddu, double cot_theta, bool pole) {
  if (!(u > 0.0)) throw DomainError("radial graph must be positive, got u = " + std::to_string(u));
  const auto [s, c] = sinh_cosh(u);
  const double s2 = s * s;
  const double coth = c / s;
  LocalGeometry g{};
  if (pole) {
    g.v = 1.0;
    g.kappa_mer = g.kappa_rot = coth - ddu / s2;
    g.chi = s;
    return g;
  }
  const double a = s2 + du * du;
  g.v = std::sqrt(a / s2);
  g.kappa_mer = (-ddu + s * c + 2.0 * coth * du * du) / (g.v * a);
  g.kappa_rot = (coth - du * cot_theta / s2) / g.v;
  g.chi = s / g.v;
  return g;
}

// cot(theta_m) for the most recently used grid size; poles hold 0 and are never read.
const std::vector<double>& cot_table(int M) {
  thread_local std::vector<double> table;
  if (static_cast<int>(table.size()) != M + 1) {
    table.assign(M + 1, 0.0);
    for (int m = 1; m < M; ++m) {
      const double th = m * (std::numbers::pi / M);
      table[m] = std::cos(th) / std::sin(th);
    }
  }
  return table;
}

}  // namespace

LocalGeometry local_geometry(double u, double du, double ddu, double theta, bool pole) {
  return local_geometry_cot(u, du, ddu, pole ? 0.0 : std::cos(theta) / std::sin(theta), pole);
}

std::vector<double> graph_speed_v(const AxisymmetricProfile& profile, int order) {
  const auto d = derivatives_on_grid(profile, order);
  std::vector<double> v(profile.u.size());
  for (std::size_t m = 0; m < v.size(); ++m) {
    const double s = std::sinh(profile.u[m]);
    v[m] = std::sqrt(1.0 + d.first[m] * d.first[m] / (s * s));
  }
  return v;
}

PrincipalCurvatures principal_curvatures(const AxisymmetricProfile& profile, int order) {
  const auto d = derivatives_on_grid(profile, order);
  const int M = profile.intervals();
  PrincipalCurvatures k;
  k.meridian.resize(M + 1);
  k.rotational.resize(M + 1);
  const auto& cot = cot_table(M);
  for (int m = 0; m <= M; ++m) {
    const auto g = local_geometry_cot(profile.u[m], d.first[m], d.second[m], cot[m], is_pole(m, M));
    k.meridian[m] = g.kappa_mer;
    k.rotational[m] = g.kappa_rot;
  }
  return k;
}

std::vector<double> support_function(const AxisymmetricProfile& profile, int order) {
  const auto v = graph_speed_v(profile, order);
  std::vector<double> chi(v.size());
  for (std::size_t m = 0; m < v.size(); ++m) chi[m] = std::sinh(profile.u[m]) / v[m];
  return chi;
}

GeometryCache build_cache(const AxisymmetricProfile& profile,
                          const symfunc::CurvatureFunctionSpec& spec, int order) {
  validate(profile);
  spec.validate_for(profile.n);
  const int M = profile.intervals();
  const int n = profile.n;
  auto d = grid_derivatives(profile.u, order);

  GeometryCache c;
  c.n = n;
  c.stencil_order = order;
  c.dtheta = profile.dtheta();
  c.u = profile.u;
  c.du = std::move(d.first);
  c.ddu = std::move(d.second);
  for (auto* field : {&c.theta, &c.v, &c.kappa_mer, &c.kappa_rot, &c.chi, &c.f, &c.fdot_mer,
                      &c.fdot_rot, &c.norm_a2, &c.metric_a})
    field->resize(M + 1);
  const auto& cot = cot_table(M);

  std::array<double, symfunc::kMaxDimension> kappa{};
  std::array<double, symfunc::kMaxDimension> grad{};
  for (int m = 0; m <= M; ++m) {
    c.theta[m] = profile.theta(m);
    const auto g = local_geometry_cot(c.u[m], c.du[m], c.ddu[m], cot[m], is_pole(m, M));
    if (!(g.kappa_mer > 0.0) || !(g.kappa_rot > 0.0) || !std::isfinite(g.kappa_mer) ||
        !std::isfinite(g.kappa_rot) || !std::isfinite(g.v))
      throw DomainError("principal curvatures left the positive cone at theta = " +
                        std::to_string(c.theta[m]) + " (kappa_mer = " +
                        std::to_string(g.kappa_mer) + ", kappa_rot = " +
                        std::to_string(g.kappa_rot) + ")");
    c.v[m] = g.v;
    c.kappa_mer[m] = g.kappa_mer;
    c.kappa_rot[m] = g.kappa_rot;
    c.chi[m] = g.chi;
    c.metric_a[m] = g.chi * g.chi * g.v * g.v * g.v * g.v;
    c.norm_a2[m] = g.kappa_mer * g.kappa_mer + (n - 1) * g.kappa_rot * g.kappa_rot;
    kappa[0] = g.kappa_mer;
    std::fill(kappa.begin() + 1, kappa.begin() + n, g.kappa_rot);
    c.f[m] = symfunc::evaluate_with_gradient(spec, std::span<const double>(kappa.data(), n),
                                             std::span<double>(grad.data(), n));
    c.fdot_mer[m] = grad[0];
    c.fdot_rot[m] = grad[1];
  }
  c.min_pair_product = std::numeric_limits<double>::infinity();
  for (int m = 0; m <= M; ++m) c.min_pair_product = std::min(c.min_pair_product, pair_product(c, m));
  c.positive_sectional = c.min_pair_product > 1.0;
  return c;
}

double pair_product(const GeometryCache& cache, int m, bool two_smallest) {
  const double mixed = cache.kappa_mer[m] * cache.kappa_rot[m];
  // The rotational eigenspace only contains a pair when its multiplicity is >= 2.
  if (!two_smallest || cache.n < 3) return mixed;
  return std::min(mixed, cache.kappa_rot[m] * cache.kappa_rot[m]);
}

double sectional_margin(const GeometryCache& cache, double epsilon, bool two_smallest) {
  double worst = std::numeric_limits<double>::infinity();
  for (int m = 0; m < cache.size(); ++m)
    worst = std::min(worst, pair_product(cache, m, two_smallest) - 1.0 -
                                epsilon * cache.f[m] * cache.f[m]);
  return worst;
}

CovariantHessian covariant_hessian(const GeometryCache& cache, std::span<const double> field) {
  if (static_cast<int>(field.size()) != cache.size())
    throw ContractError("covariant_hessian: field has " + std::to_string(field.size()) +
                        " nodes, cache has " + std::to_string(cache.size()));
  const int M = cache.size() - 1;
  const auto d = grid_derivatives(field, cache.stencil_order);
  CovariantHessian h;
  h.e1e1.resize(M + 1);
  h.e2e2.resize(M + 1);
  for (int m = 0; m <= M; ++m) {
    const double s = std::sinh(cache.u[m]);
    const double s2 = s * s;
    if (is_pole(m, M)) {
      h.e1e1[m] = h.e2e2[m] = d.second[m] / s2;
      continue;
    }
    // g = A dtheta^2 + sinh^2 u sin^2 theta g_{S^{n-1}}, A = sinh^2 u + u'^2.
    const double up = cache.du[m];
    const double a = s2 + up * up;
    const double da = 2.0 * up * (s * std::cosh(cache.u[m]) + cache.ddu[m]);
    const double coth = std::cosh(cache.u[m]) / s;
    const double theta = cache.theta[m];
    h.e1e1[m] = (d.second[m] - 0.5 * da / a * d.first[m]) / a;
    h.e2e2[m] = (coth * up + std::cos(theta) / std::sin(theta)) * d.first[m] / a;
  }
  return h;
}

std::vector<double> covariant_hessian_F(const AxisymmetricProfile& profile,
                                        const GeometryCache& cache) {
  if (static_cast<int>(profile.u.size()) != cache.size() || profile.n != cache.n)
    throw ContractError("covariant_hessian_F: cache does not belong to this profile");
  const auto h = covariant_hessian(cache, cache.f);
  std::vector<double> out(h.e1e1.size());
  for (std::size_t m = 0; m < out.size(); ++m)
    out[m] = cache.fdot_mer[m] * h.e1e1[m] + (cache.n - 1) * cache.fdot_rot[m] * h.e2e2[m];
  return out;
}

}  // namespace hypflow::geometry
