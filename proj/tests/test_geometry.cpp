#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "hypflow/errors.hpp"
#include "hypflow/geometry.hpp"

using namespace hypflow;
using namespace hypflow::geometry;
using hypflow::symfunc::CurvatureFunctionSpec;

namespace {

constexpr double kPi = std::numbers::pi;

AxisymmetricProfile sample(int n, int M, const std::function<double(double)>& u) {
  AxisymmetricProfile p;
  p.n = n;
  p.u.resize(M + 1);
  for (int m = 0; m <= M; ++m) p.u[m] = u(p.theta(m));
  return p;
}

double max_abs_diff(const std::vector<double>& a, const std::function<double(int)>& b) {
  double e = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) e = std::max(e, std::abs(a[m] - b(static_cast<int>(m))));
  return e;
}

double coth(double x) { return std::cosh(x) / std::sinh(x); }

}  // namespace

TEST_CASE("geodesic spheres are exact at any resolution") {
  for (int order : {2, 4})
    for (int M : {8, 64, 513})
      for (double r0 : {0.3, 1.0, 2.5})
        for (int n : {2, 3, 5}) {
          const auto p = sample(n, M, [&](double) { return r0; });
          const auto c = build_cache(p, CurvatureFunctionSpec::sigma(2), order);
          for (int m = 0; m <= M; ++m) {
            CHECK(c.v[m] == 1.0);
            CHECK(std::abs(c.kappa_mer[m] - coth(r0)) <= 1e-12);
            CHECK(std::abs(c.kappa_rot[m] - coth(r0)) <= 1e-12);
            CHECK(std::abs(c.chi[m] - std::sinh(r0)) <= 1e-12);
            CHECK(std::abs(c.norm_a2[m] - n * coth(r0) * coth(r0)) <= 1e-12);
            CHECK(std::abs(c.f[m] - coth(r0)) <= 1e-12);
          }
        }
}

TEST_CASE("unit sphere values") {
  const auto p = sample(3, 64, [](double) { return 1.0; });
  const auto k = principal_curvatures(p);
  CHECK(k.meridian[10] == doctest::Approx(1.313035).epsilon(1e-6));
  CHECK(k.rotational[0] == doctest::Approx(1.313035).epsilon(1e-6));
  CHECK(support_function(p)[7] == doctest::Approx(1.175201).epsilon(1e-6));
  const auto c = build_cache(p, CurvatureFunctionSpec::sigma(2));
  CHECK(sectional_margin(c, 0.0) == doctest::Approx(0.724061).epsilon(1e-6));
  const double eps0 = 1.0 / (std::cosh(1.0) * std::cosh(1.0));
  CHECK(eps0 == doctest::Approx(0.419974).epsilon(1e-6));
  CHECK(std::abs(sectional_margin(c, eps0)) <= 1e-12);
}

TEST_CASE("grid derivatives") {
  SUBCASE("constant profile has vanishing derivatives") {
    const auto p = sample(3, 32, [](double) { return 0.7; });
    for (int order : {2, 4}) {
      const auto d = derivatives_on_grid(p, order);
      for (int m = 0; m <= 32; ++m) {
        CHECK(d.first[m] == 0.0);
        CHECK(d.second[m] == 0.0);
      }
    }
  }

  SUBCASE("cos theta at the equator") {
    for (int M : {16, 64, 256}) {
      const auto p = sample(3, M, [](double t) { return 2.0 + std::cos(t); });
      const auto d = derivatives_on_grid(p, 2);
      const double h = kPi / M;
      CHECK(std::abs(d.first[M / 2] + 1.0) <= h * h);
    }
  }

  SUBCASE("refinement shows the stencil order") {
    auto f = [](double t) { return 1.0 + 0.05 * std::cos(2 * t) + 0.02 * std::cos(3 * t); };
    auto f1 = [](double t) { return -0.1 * std::sin(2 * t) - 0.06 * std::sin(3 * t); };
    auto f2 = [](double t) { return -0.2 * std::cos(2 * t) - 0.18 * std::cos(3 * t); };
    for (int order : {2, 4}) {
      std::vector<double> err;
      for (int M : {64, 128, 256}) {
        const auto p = sample(3, M, f);
        const auto d = derivatives_on_grid(p, order);
        const double e1 = max_abs_diff(d.first, [&](int m) { return f1(p.theta(m)); });
        const double e2 = max_abs_diff(d.second, [&](int m) { return f2(p.theta(m)); });
        err.push_back(std::max(e1, e2));
      }
      for (int i = 0; i + 1 < 3; ++i) {
        const double observed = std::log2(err[i] / err[i + 1]);
        CHECK(observed == doctest::Approx(order).epsilon(0.05));
      }
    }
  }

  SUBCASE("poles have zero slope") {
    const auto p = sample(3, 40, [](double t) { return 1.0 + 0.1 * std::cos(t) + 0.03 * std::cos(2 * t); });
    for (int order : {2, 4}) {
      const auto d = derivatives_on_grid(p, order);
      CHECK(d.first.front() == 0.0);
      CHECK(d.first.back() == 0.0);
    }
  }

  SUBCASE("coarse grids and bad stencils are rejected") {
    CHECK_THROWS_AS(derivatives_on_grid(sample(3, 7, [](double) { return 1.0; })), ConfigError);
    CHECK_NOTHROW(derivatives_on_grid(sample(3, 8, [](double) { return 1.0; })));
    CHECK_THROWS_AS(derivatives_on_grid(sample(3, 16, [](double) { return 1.0; }), 3), ConfigError);
  }
}

TEST_CASE("graph speed factor") {
  const int M = 256;
  const auto p = sample(3, M, [](double t) { return 1.0 + 0.1 * std::cos(t); });
  const auto v = graph_speed_v(p);
  CHECK(v[M / 2] == doctest::Approx(1.003614).epsilon(1e-6));
  CHECK(v.front() == 1.0);
  for (double x : v) CHECK(x >= 1.0);
}

TEST_CASE("domain errors") {
  auto p = sample(3, 16, [](double) { return 1.0; });
  p.u[5] = 0.0;
  CHECK_THROWS_AS(principal_curvatures(p), DomainError);
  p.u[5] = -1.0;
  CHECK_THROWS_AS(graph_speed_v(p), DomainError);
  CHECK_THROWS_AS(local_geometry(-0.1, 0.0, 0.0, 1.0, false), DomainError);

  // Strong dent: the meridian curvature turns negative.
  const auto dent = sample(3, 64, [](double t) { return 1.0 + 0.9 * std::cos(2 * t); });
  CHECK_THROWS_AS(build_cache(dent, CurvatureFunctionSpec::sigma(2)), DomainError);
}

TEST_CASE("reflection symmetry of the cache") {
  const int M = 128;
  const auto p = sample(3, M, [](double t) { return 0.9 + 0.04 * std::cos(2 * t) + 0.01 * std::cos(4 * t); });
  const auto c = build_cache(p, CurvatureFunctionSpec::sigma(2));
  for (const auto* field : {&c.v, &c.kappa_mer, &c.kappa_rot, &c.chi, &c.f, &c.fdot_mer,
                            &c.fdot_rot, &c.norm_a2})
    for (int m = 0; m <= M; ++m)
      CHECK(std::abs((*field)[m] - (*field)[M - m]) <= 1e-12 * std::abs((*field)[m]));
}

TEST_CASE("umbilic poles") {
  auto u = [](double t) { return 1.0 + 0.05 * std::cos(2 * t) + 0.02 * std::cos(t); };
  std::vector<double> gap_next;
  for (int M : {64, 128, 256}) {
    const auto k = principal_curvatures(sample(3, M, u));
    CHECK(std::abs(k.meridian.front() - k.rotational.front()) <= 1e-12);
    CHECK(std::abs(k.meridian.back() - k.rotational.back()) <= 1e-12);
    gap_next.push_back(std::abs(k.meridian[1] - k.rotational[1]));
  }
  // Next to the pole the curvatures separate like theta^2.
  for (int i = 0; i + 1 < 3; ++i)
    CHECK(gap_next[i] / gap_next[i + 1] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("support function bounds") {
  for (int M : {32, 128}) {
    const auto p = sample(4, M, [](double t) { return 0.7 + 0.05 * std::cos(2 * t) + 0.03 * std::cos(t); });
    const auto chi = support_function(p);
    const auto v = graph_speed_v(p);
    const double umin = *std::min_element(p.u.begin(), p.u.end());
    const double umax = *std::max_element(p.u.begin(), p.u.end());
    const double vmax = *std::max_element(v.begin(), v.end());
    for (double x : chi) {
      CHECK(x >= std::sinh(umin) / vmax);
      CHECK(x <= std::sinh(umax));
    }
  }
}

TEST_CASE("sectional margin") {
  const auto spec = CurvatureFunctionSpec::sigma(2);
  for (double amp : {0.0, 0.05, 0.2, 0.35}) {
    for (double r0 : {0.8, 1.5, 3.0}) {
      const auto p = sample(3, 64, [&](double t) { return r0 + amp * std::cos(2 * t); });
      GeometryCache c;
      try {
        c = build_cache(p, spec);
      } catch (const DomainError&) {
        continue;
      }
      CHECK((sectional_margin(c, 0.0) > 0) == c.positive_sectional);
      CHECK(sectional_margin(c, 0.3) <= sectional_margin(c, 0.0));
      CHECK(sectional_margin(c, 0.0, true) <= sectional_margin(c, 0.0, false));
    }
  }

  SUBCASE("surfaces only uses the mixed pair") {
    const auto p = sample(2, 64, [](double t) { return 1.0 + 0.1 * std::cos(2 * t); });
    const auto c = build_cache(p, spec);
    for (int m = 0; m <= 64; ++m)
      CHECK(pair_product(c, m) == c.kappa_mer[m] * c.kappa_rot[m]);
  }

  SUBCASE("large flattened sphere loses positive sectional curvature") {
    const auto p = sample(3, 128, [](double t) { return 3.0 + 0.3 * std::cos(2 * t); });
    const auto c = build_cache(p, spec);
    CHECK(!c.positive_sectional);
    CHECK(c.min_pair_product < 1.0);
  }
}

TEST_CASE("covariant hessian") {
  const auto spec = CurvatureFunctionSpec::sigma(2);

  SUBCASE("constant fields and spheres") {
    const auto p = sample(3, 64, [](double t) { return 1.0 + 0.05 * std::cos(2 * t); });
    const auto c = build_cache(p, spec);
    const std::vector<double> one(65, 3.0);
    const auto h = covariant_hessian(c, one);
    for (int m = 0; m <= 64; ++m) {
      CHECK(h.e1e1[m] == 0.0);
      CHECK(h.e2e2[m] == 0.0);
    }
    const auto sphere = sample(3, 64, [](double) { return 1.3; });
    for (double x : covariant_hessian_F(sphere, build_cache(sphere, spec))) CHECK(x == 0.0);
  }

  SUBCASE("cosh r restricted to the hypersurface") {
    // Hess(cosh r) = cosh r gbar ambient, so on M: nabla_i nabla_i cosh u = cosh u - chi kappa_i.
    auto u = [](double t) { return 1.0 + 0.05 * std::cos(2 * t) + 0.02 * std::cos(3 * t); };
    std::vector<double> err;
    for (int M : {64, 128, 256}) {
      const auto p = sample(3, M, u);
      const auto c = build_cache(p, spec);
      std::vector<double> field(M + 1);
      for (int m = 0; m <= M; ++m) field[m] = std::cosh(p.u[m]);
      const auto h = covariant_hessian(c, field);
      double e = 0.0;
      for (int m = 0; m <= M; ++m) {
        e = std::max(e, std::abs(h.e1e1[m] - (std::cosh(p.u[m]) - c.chi[m] * c.kappa_mer[m])));
        e = std::max(e, std::abs(h.e2e2[m] - (std::cosh(p.u[m]) - c.chi[m] * c.kappa_rot[m])));
      }
      err.push_back(e);
    }
    CHECK(err.back() <= 1e-7);
    CHECK(err[0] / err[1] >= 8.0);
    CHECK(err[1] / err[2] >= 8.0);
  }

  SUBCASE("size mismatch is a contract error") {
    const auto p = sample(3, 32, [](double) { return 1.0; });
    const auto c = build_cache(p, spec);
    CHECK_THROWS_AS(covariant_hessian(c, std::vector<double>(10, 1.0)), ContractError);
    CHECK_THROWS_AS(covariant_hessian_F(sample(3, 16, [](double) { return 1.0; }), c), ContractError);
  }
}
