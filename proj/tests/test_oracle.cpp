#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "hypflow/errors.hpp"
#include "hypflow/geometry.hpp"
#include "hypflow/oracle.hpp"

using namespace hypflow;
using namespace hypflow::oracle;

namespace {

constexpr double kPi = std::numbers::pi;

double coth(double x) { return std::cosh(x) / std::sinh(x); }

// Analytic curvatures from closed-form derivatives, no grid involved.
geometry::LocalGeometry exact(const TestProfile& p, double theta) {
  return geometry::local_geometry(static_cast<double>(p.u(theta)), p.du(theta), p.ddu(theta),
                                  theta, false);
}

}  // namespace

TEST_CASE("embedding") {
  const ProfileFunction unit = [](Real) { return Real(1); };
  const auto x = embed(unit, 3, 0.0L, 0.0L);
  REQUIRE(x.size() == 5);
  CHECK(static_cast<double>(x(0)) == doctest::Approx(std::cosh(1.0)));
  CHECK(static_cast<double>(x(1)) == doctest::Approx(std::sinh(1.0)));
  for (int i = 2; i < 5; ++i) CHECK(x(i) == 0.0L);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> th(0.0, kPi), ph(0.0, 2 * kPi);
  const auto& bumpy = test_profile("two_mode");
  for (int i = 0; i < 50; ++i) {
    const auto p = embed(bumpy.u, 4, th(rng), ph(rng));
    CHECK(std::abs(static_cast<double>(minkowski(p, p) + 1)) <= 1e-12);
  }

  const auto north = embed(unit, 3, 0.0L, 0.0L);
  const auto south = embed(unit, 3, std::numbers::pi_v<Real>, 0.0L);
  CHECK(static_cast<double>(geodesic_distance(north, south)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(embed(unit, 1, 0.0L, 0.0L), ContractError);
}

TEST_CASE("spheres are reproduced by the oracle") {
  for (double r0 : {0.6, 1.0, 2.0}) {
    const ProfileFunction u = [r0](Real) { return Real(r0); };
    for (int n : {2, 3, 4})
      for (double theta : {0.3, 1.0, 2.0, 3.0}) {
        const auto ff = fd_fundamental_forms(u, n, theta, 1e-4);
        CHECK(std::abs(ff.kappa_mer - coth(r0)) <= 1e-8);
        CHECK(std::abs(ff.kappa_rot - coth(r0)) <= 1e-8);
        CHECK(ff.radial_alignment > 0.0);
      }
  }
}

TEST_CASE("oracle matches the analytic formulas on the test profiles") {
  for (const auto& p : test_profiles())
    for (int n : {2, 3, 5})
      for (double theta : {0.05, 0.5, kPi / 3, 1.7, 2.9, 3.1}) {
        const auto ff = fd_fundamental_forms(p.u, n, theta, 1e-4);
        const auto g = exact(p, theta);
        CHECK(std::abs(ff.kappa_mer - g.kappa_mer) <= 1e-7 * std::abs(g.kappa_mer));
        CHECK(std::abs(ff.kappa_rot - g.kappa_rot) <= 1e-7 * std::abs(g.kappa_rot));
        CHECK(ff.radial_alignment > 0.0);
      }
}

TEST_CASE("perturbed profile at pi/3 matches the grid geometry at M = 1024") {
  const auto& p = test_profile("perturbed");
  geometry::AxisymmetricProfile grid;
  grid.n = 3;
  grid.u.resize(1025);
  for (int m = 0; m <= 1024; ++m) grid.u[m] = static_cast<double>(p.u(grid.theta(m)));
  // pi/3 is not a node of this grid, so compare at the nearest node.
  const int m = static_cast<int>(std::lround(1024.0 / 3.0));
  const auto k = geometry::principal_curvatures(grid);
  const auto ff = fd_fundamental_forms(p.u, 3, grid.theta(m), 1e-4);
  CHECK(std::abs(k.meridian[m] - ff.kappa_mer) <= 1e-6 * ff.kappa_mer);
  CHECK(std::abs(k.rotational[m] - ff.kappa_rot) <= 1e-6 * ff.kappa_rot);
}

TEST_CASE("differencing error is second order in the step") {
  const auto& p = test_profile("perturbed");
  for (double theta : {0.7, kPi / 3, 2.2}) {
    const auto g = exact(p, theta);
    std::vector<double> hs{1e-3, 5e-4, 2.5e-4}, err;
    for (double h : hs) {
      const auto ff = fd_fundamental_forms(p.u, 3, theta, h);
      err.push_back(std::abs(ff.kappa_mer - g.kappa_mer) + std::abs(ff.kappa_rot - g.kappa_rot));
    }
    // Least-squares slope of log err against log h.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < 3; ++i) {
      const double x = std::log(hs[i]), y = std::log(err[i]);
      sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
  }
}

TEST_CASE("rotational curvature does not depend on the sampled azimuth") {
  const auto& p = test_profile("mode3");
  for (int n : {3, 4}) {
    const auto base = fd_fundamental_forms(p.u, n, 1.1, 1e-4);
    for (Real phi : {0.4L, 1.9L, 4.0L}) {
      OracleOptions o;
      o.phi = phi;
      const auto ff = fd_fundamental_forms(p.u, n, 1.1, 1e-4, o);
      CHECK(std::abs(ff.kappa_rot - base.kappa_rot) <= 1e-10);
      CHECK(std::abs(ff.kappa_mer - base.kappa_mer) <= 1e-10);
    }
  }
}

TEST_CASE("preconditions") {
  const ProfileFunction u = [](Real) { return Real(1); };
  CHECK_THROWS_AS(fd_fundamental_forms(u, 3, 0.005, 1e-4), ContractError);
  CHECK_THROWS_AS(fd_fundamental_forms(u, 3, kPi - 0.005, 1e-4), ContractError);
  CHECK_THROWS_AS(fd_fundamental_forms(u, 3, 1.0, 1e-2), ContractError);
  CHECK_THROWS_AS(fd_fundamental_forms(u, 3, 1.0, 1e-6), ContractError);
  CHECK_THROWS_AS(test_profile("nonexistent"), ConfigError);
}

TEST_CASE("cross check over the five-profile set") {
  for (const auto& p : test_profiles()) {
    const auto r = cross_check(p, 3, 512, 1e-4);
    CHECK(r.nodes_compared > 500);
    CHECK(r.max_relative_discrepancy <= 1e-6);
  }
  OracleOptions fault;
  fault.flip_orientation = true;
  CHECK(cross_check(test_profile("perturbed"), 3, 64, 1e-4, fault).max_relative_discrepancy > 1.0);
}
