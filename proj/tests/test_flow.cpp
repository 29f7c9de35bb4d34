#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <string>
#include <vector>

#include "hypflow/errors.hpp"
#include "hypflow/flow.hpp"
#include "hypflow/monitors.hpp"

using namespace hypflow;
using namespace hypflow::flow;
using symfunc::CurvatureFunctionSpec;

namespace {

double coth(double x) { return std::cosh(x) / std::sinh(x); }

FlowConfig sphere_config(double radius = 1.0, int M = 64) {
  FlowConfig c;
  c.M = M;
  c.scenario.name = "sphere";
  c.scenario.radius = radius;
  return c;
}

FlowConfig perturbed_config(double amplitude, int M) {
  FlowConfig c;
  c.M = M;
  c.scenario.name = "perturbed_sphere";
  c.scenario.amplitude = amplitude;
  c.scenario.mode = 2;
  return c;
}

// Max over the run of |u - Theta(t)| for a sphere of initial radius theta0.
double sphere_error(const FlowConfig& config, double theta0) {
  double err = 0.0;
  run(config, [&](const FlowState& s) {
    const double exact = spherical_theta(theta0, s.profile.t);
    for (double u : s.profile.u) err = std::max(err, std::abs(u - exact));
  });
  return err;
}

}  // namespace

TEST_CASE("spherical solution closed form") {
  CHECK(spherical_theta(1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(spherical_extinction_time(1.0) == doctest::Approx(0.433781).epsilon(1e-6));
  CHECK(spherical_theta(1.0, 0.2) == doctest::Approx(std::acosh(std::exp(-0.2) * std::cosh(1.0))));
  // e^-0.2 cosh 1 = 0.818731 * 1.543081 = 1.263365
  CHECK(spherical_theta(1.0, 0.2) == doctest::Approx(0.710713).epsilon(1e-6));
  CHECK_THROWS_AS(spherical_theta(1.0, 0.5), DomainError);
  CHECK_THROWS_AS(spherical_theta(1.0, spherical_extinction_time(1.0)), DomainError);
  CHECK_THROWS_AS(spherical_theta(1.0, -0.1), DomainError);
  CHECK_THROWS_AS(spherical_theta(0.0, 0.0), DomainError);

  // dTheta/dt = -coth Theta, checked by a Richardson-extrapolated central difference.
  auto central = [](double t, double h) {
    return (spherical_theta(1.0, t + h) - spherical_theta(1.0, t - h)) / (2 * h);
  };
  for (double t : {0.01, 0.1, 0.3, 0.42}) {
    const double h = 1e-4;
    const double d = (4.0 * central(t, h) - central(t, 2 * h)) / 3.0;
    CHECK(d == doctest::Approx(-coth(spherical_theta(1.0, t))).epsilon(1e-9));
  }
  // Strictly decreasing towards 0.
  double prev = 2.0;
  for (int i = 0; i < 100; ++i) {
    const double th = spherical_theta(1.0, 0.433 * i / 100.0);
    CHECK(th < prev);
    prev = th;
  }
  CHECK(prev < 0.2);
}

TEST_CASE("comparison radius stays accurate close to extinction") {
  const double T = spherical_extinction_time(1.0);
  for (double remaining : {1e-2, 1e-4, 1e-6, 1e-9}) {
    const long double exact = std::acosh(std::exp(static_cast<long double>(remaining)));
    CHECK(comparison_theta(T, T - remaining) ==
          doctest::Approx(static_cast<double>(exact)).epsilon(1e-6));
  }
}

TEST_CASE("one Heun step on a sphere matches the Taylor expansion of the closed form") {
  for (double r0 : {0.5, 1.0, 2.0}) {
    FlowConfig config = sphere_config(r0);
    config.cfl_safety = 1e3;  // a uniform sphere has no unstable modes; let dt be chosen below
    const FlowState s0 = make_state(initial_profile(config.scenario, config.n, config.M), config);
    const double csch2 = 1.0 / std::pow(std::sinh(r0), 2);
    double previous_error = 0.0;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
      const FlowState s1 = step(s0, config, dt);
      REQUIRE(s1.dt_last == dt);
      const double taylor = r0 - dt * coth(r0) - 0.5 * dt * dt * coth(r0) * csch2;
      double err = 0.0;
      for (double u : s1.profile.u) err = std::max(err, std::abs(u - taylor));
      CHECK(err < 2.0 * std::pow(dt, 3) * (1.0 + coth(r0)) * (1.0 + csch2) * (1.0 + csch2));
      if (previous_error > 0.0) CHECK(previous_error / err == doctest::Approx(8.0).epsilon(0.1));
      previous_error = err;
      const double exact = std::acosh(std::exp(-dt) * std::cosh(r0));
      CHECK(std::abs(s1.profile.u[0] - exact) < 1e-6);
    }
  }
}

TEST_CASE("no constant-shift symmetry") {
  FlowConfig a = sphere_config(1.0), b = sphere_config(2.0);
  const double dt = 1e-4;
  const auto sa = step(make_state(initial_profile(a.scenario, a.n, a.M), a), a, dt);
  const auto sb = step(make_state(initial_profile(b.scenario, b.n, b.M), b), b, dt);
  const double da = 1.0 - sa.profile.u[10], db = 2.0 - sb.profile.u[10];
  CHECK(da == doctest::Approx(dt * coth(1.0)).epsilon(1e-4));
  CHECK(db == doctest::Approx(dt * coth(2.0)).epsilon(1e-4));
  CHECK(da > db * 1.2);
}

TEST_CASE("stable step size on a sphere") {
  for (int n : {2, 3, 5}) {
    FlowConfig config = sphere_config(0.8, 128);
    config.n = n;
    const auto s = make_state(initial_profile(config.scenario, n, config.M), config);
    const double h = std::acos(-1.0) / config.M;
    // Fdot^11 = 1/n at an umbilic point for every normalized F.
    const double expected = config.cfl_safety * h * h * std::pow(std::sinh(0.8), 2) * n;
    CHECK(stable_dt(s, config) == doctest::Approx(expected).epsilon(1e-10));
    CHECK(step(s, config).dt_last == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("rejected trial steps are halved, and too many halvings end the run") {
  FlowConfig config = sphere_config(0.05);
  config.relaxed_limits = true;
  config.cfl_safety = 1000.0;  // full step would overshoot the origin
  const auto s0 = make_state(initial_profile(config.scenario, config.n, config.M), config);
  const double full = stable_dt(s0, config);
  REQUIRE(full * coth(0.05) > 0.05);

  const auto s1 = step(s0, config);
  CHECK(s1.halving_debt > 0);
  CHECK(s1.dt_last < full);
  CHECK(s1.dt_last == doctest::Approx(full * std::pow(0.5, s1.halving_debt)));
  for (double u : s1.profile.u) CHECK(u > 0.0);

  FlowState indebted = s0;
  indebted.halving_debt = 20;
  CHECK_THROWS_AS(step(indebted, config), BlowUpError);

  // A full-size step clears the debt.
  FlowConfig calm = sphere_config(1.0);
  FlowState s2 = make_state(initial_profile(calm.scenario, calm.n, calm.M), calm);
  s2.halving_debt = 7;
  CHECK(step(s2, calm).halving_debt == 0);
}

TEST_CASE("sphere run tracks the closed form and estimates the extinction time") {
  const FlowConfig config = sphere_config(1.0, 64);
  double err = 0.0;
  const auto result = run(config, [&](const FlowState& s) {
    const double exact = spherical_theta(1.0, s.profile.t);
    for (double u : s.profile.u) err = std::max(err, std::abs(u - exact));
  });
  CHECK(result.status == ExitStatus::kCleanContraction);
  CHECK(result.reached_stop_theta);
  CHECK(result.theorem_conformant);
  CHECK(result.rescued_steps == 0);
  CHECK(err < 1e-4);
  CHECK(std::abs(result.extinction_estimate - 0.433781) < 1e-3);
  CHECK(std::isfinite(result.extinction_estimate));
  REQUIRE(result.verdict);
  CHECK(result.verdict->passed());
  CHECK(result.eps0 == doctest::Approx(0.419974).epsilon(1e-6));
  CHECK(result.eps_used == doctest::Approx(0.5 * result.eps0));
  CHECK(result.verdict->pinching_constant == doctest::Approx(10.392).epsilon(1e-4));

  CHECK(result.records.front().t == 0.0);
  CHECK(result.records.back().t == result.final_state.profile.t);
  CHECK(result.records.back().min_u <= config.stop_theta);
  for (std::size_t i = 1; i < result.records.size(); ++i)
    CHECK(result.records[i].t > result.records[i - 1].t);
  // Matched comparison sphere: u~ stays 1 up to the discretization error.
  for (const auto& r : result.records) CHECK((!std::isfinite(r.osc_u_tilde) || r.osc_u_tilde < 1e-10));
  CHECK(result.snapshots.size() == (result.records.size() - 1) / config.profile_every + 1 +
                                       ((result.records.size() - 1) % config.profile_every != 0));
}

TEST_CASE("sphere error shrinks by at least 3x per grid doubling") {
  const double coarse = sphere_error(sphere_config(1.0, 64), 1.0);
  const double fine = sphere_error(sphere_config(1.0, 128), 1.0);
  CHECK(coarse / fine >= 3.0);

  FlowConfig c2 = sphere_config(1.0, 64), f2 = sphere_config(1.0, 128);
  c2.stencil_order = f2.stencil_order = 2;
  CHECK(sphere_error(c2, 1.0) / sphere_error(f2, 1.0) >= 3.0);
}

TEST_CASE("comparison principle between two spheres") {
  FlowConfig small = sphere_config(1.0), large = sphere_config(1.2);
  FlowState a = make_state(initial_profile(small.scenario, small.n, small.M), small);
  FlowState b = make_state(initial_profile(large.scenario, large.n, large.M), large);
  int steps = 0;
  while (*std::min_element(a.profile.u.begin(), a.profile.u.end()) > 0.05) {
    const double dt = std::min(stable_dt(a, small), stable_dt(b, large));
    a = step(a, small, dt);
    b = step(b, large, dt);
    REQUIRE(a.profile.t == b.profile.t);
    const double a_max = *std::max_element(a.profile.u.begin(), a.profile.u.end());
    const double b_min = *std::min_element(b.profile.u.begin(), b.profile.u.end());
    if (!(a_max < b_min)) {
      FAIL("ordering lost at t = " << a.profile.t);
      break;
    }
    ++steps;
  }
  CHECK(steps > 100);
}

TEST_CASE("perturbed sphere contracts cleanly with every monitor green") {
  const auto result = run(perturbed_config(0.05, 128));
  REQUIRE(result.verdict);
  const auto& v = *result.verdict;
  CHECK(v.minF_monotone);
  CHECK(v.pinching_bound);
  CHECK(v.G_positive);
  CHECK(v.psc_preserved);
  CHECK(v.osc_slope < 0.0);
  CHECK(v.roundness_decay);
  CHECK(result.reached_stop_theta);
  CHECK(std::isfinite(result.extinction_estimate));
  CHECK(result.extinction_estimate < spherical_extinction_time(1.05));
  CHECK(result.extinction_estimate > spherical_extinction_time(0.95));
  CHECK(v.osc_decay);
  CHECK(result.status == ExitStatus::kCleanContraction);
}

TEST_CASE("osc decay rate agrees with the linearization about the shrinking sphere") {
  // Degree-2 mode on S^3: d log(w / r)/dt = -(5/3) / sinh^2 r + coth r / r, integrated
  // along dt = -tanh r dr.
  const auto result = run(perturbed_config(0.002, 64));
  REQUIRE(result.verdict);
  const auto& first = result.records.front();
  const auto& last = result.records.back();
  const double predicted = std::pow(std::tanh(last.theta) / std::tanh(first.theta), 5.0 / 3.0) *
                           first.theta / last.theta;
  const double measured = last.osc_u_tilde / first.osc_u_tilde;
  CHECK(measured == doctest::Approx(predicted).epsilon(0.02));
}

TEST_CASE("rescaling") {
  FlowConfig config = sphere_config(0.7);
  const auto s = make_state(initial_profile(config.scenario, config.n, config.M), config);
  const auto r = rescale(s, 0.7);
  CHECK(r.osc == 0.0);
  for (double x : r.u_tilde) CHECK(x == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rescale(s, 1.0).tau == 0.0);
  CHECK(rescale(s, 0.5).tau == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(rescale(s, 0.0), DomainError);
}

TEST_CASE("Tso quantity") {
  FlowConfig config = sphere_config(1.0);
  auto s = make_state(initial_profile(config.scenario, config.n, config.M), config);
  CHECK(tso_quantity(s, 0.5) == doctest::Approx(coth(1.0) / (std::sinh(1.0) - 0.5 * std::sinh(0.5))));
  CHECK(tso_quantity(s, 0.5) == doctest::Approx(1.435555).epsilon(1e-6));
  const double phi = tso_quantity(s, 0.5);
  for (double& f : s.cache.f) f *= 2.0;
  CHECK(tso_quantity(s, 0.5) == doctest::Approx(2.0 * phi));
  CHECK_THROWS_AS(tso_quantity(s, 2.0), ContractError);
}

TEST_CASE("Tso quantity stays below the a priori bound along the sphere run") {
  FlowConfig config = sphere_config(1.0);
  const double rho = 0.25;
  config.tso_rho = rho;
  const auto result = run(config);
  const double bound_a = 2.0 * std::cosh(2.0 * 1.0) * std::pow(0.5 * std::sinh(rho), -2);
  const double bound = std::max(result.records.front().phi_max, bound_a);
  int checked = 0;
  for (const auto& r : result.records) {
    if (r.min_u < rho) break;
    REQUIRE(std::isfinite(r.phi_max));
    CHECK(r.phi_max <= bound);
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("extinction fit") {
  std::vector<monitors::MonitorRecord> records;
  for (int i = 0; i < 40; ++i) {
    monitors::MonitorRecord r;
    r.t = 0.01 * i;
    r.min_u = spherical_theta(1.0, r.t);
    records.push_back(r);
  }
  CHECK(fit_extinction_time(records) == doctest::Approx(spherical_extinction_time(1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(fit_extinction_time({}), ContractError);

  attach_comparison(records, spherical_extinction_time(1.0));
  for (const auto& r : records) {
    CHECK(r.theta == doctest::Approx(r.min_u).epsilon(1e-12));
    CHECK(r.tau == doctest::Approx(-std::log(r.theta)));
  }
  attach_comparison(records, 0.2);
  CHECK(std::isnan(records.back().theta));
  CHECK(std::isfinite(records.front().theta));
}

TEST_CASE("speed evolution residual on a sphere is within 2 dt") {
  FlowConfig config = sphere_config(1.0);
  config.stop_time = 0.3;
  std::deque<FlowState> window;
  double worst = 0.0;
  int checked = 0;
  run(config, [&](const FlowState& s) {
    window.push_back(s);
    if (window.size() > 3) window.pop_front();
    if (window.size() < 3) return;
    const auto r = speed_residual(window[0], window[1], window[2]);
    worst = std::max(worst, r.relative() / window[2].dt_last);
    ++checked;
  });
  CHECK(checked > 100);
  CHECK(worst <= 2.0);
}

TEST_CASE("speed evolution residual converges on a perturbed sphere") {
  auto residual_at = [](int M, int order) {
    FlowConfig config = perturbed_config(0.05, M);
    config.stencil_order = order;
    config.stop_time = 0.1;
    std::deque<FlowState> window;
    run(config, [&](const FlowState& s) {
      window.push_back(s);
      if (window.size() > 3) window.pop_front();
    });
    return speed_residual(window[0], window[1], window[2]).relative();
  };
  CHECK(residual_at(64, 4) / residual_at(128, 4) >= 2.8);
  CHECK(residual_at(128, 2) / residual_at(256, 2) >= 2.8);
}

TEST_CASE("speed residual preconditions") {
  FlowConfig config = sphere_config(1.0);
  const auto s0 = make_state(initial_profile(config.scenario, config.n, config.M), config);
  const auto s1 = step(s0, config);
  const auto s2 = step(s1, config);
  CHECK_THROWS_AS(speed_residual(s2, s1, s0), ContractError);
  FlowConfig other = sphere_config(1.0, 128);
  auto t2 = make_state(initial_profile(other.scenario, other.n, other.M), other);
  t2.profile.t = 1.0;
  CHECK_THROWS_AS(speed_residual(s0, s1, t2), ContractError);
}

TEST_CASE("hypothesis gates") {
  // Convex but the mixed pair product drops below 1 on a large flattened sphere.
  FlowConfig flat = perturbed_config(0.3, 128);
  flat.scenario.radius = 3.0;
  CHECK_THROWS_AS(run(flat), HypothesisError);

  FlowConfig dented = perturbed_config(0.9, 128);
  try {
    run(dented);
    FAIL("expected a hypothesis error");
  } catch (const HypothesisError& e) {
    CHECK(std::string(e.what()).find("positive sectional curvature") != std::string::npos);
  }

  FlowConfig negative = perturbed_config(1.5, 128);
  CHECK_THROWS_AS(run(negative), HypothesisError);
}

TEST_CASE("two-dimensional runs are executed but flagged") {
  FlowConfig config = sphere_config(1.0);
  config.n = 2;
  const auto result = run(config);
  CHECK(result.status == ExitStatus::kCleanContraction);
  CHECK_FALSE(result.theorem_conformant);
  REQUIRE_FALSE(result.notes.empty());
  CHECK(result.notes.front().find("not theorem-conformant") != std::string::npos);
}

TEST_CASE("config validation") {
  auto expect_config_error = [](auto mutate) {
    FlowConfig c = sphere_config();
    mutate(c);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  expect_config_error([](FlowConfig& c) { c.M = 32; });
  expect_config_error([](FlowConfig& c) { c.cfl_safety = 1.5; });
  expect_config_error([](FlowConfig& c) { c.cfl_safety = 0.0; });
  expect_config_error([](FlowConfig& c) { c.n = 1; });
  expect_config_error([](FlowConfig& c) { c.epsilon_policy = 1.0; });
  expect_config_error([](FlowConfig& c) { c.stencil_order = 3; });
  expect_config_error([](FlowConfig& c) { c.stop_theta = 0.0; });
  expect_config_error([](FlowConfig& c) { c.stop_time = -1.0; });
  expect_config_error([](FlowConfig& c) { c.f_spec = CurvatureFunctionSpec::sigma(4); });
  FlowConfig relaxed = sphere_config();
  relaxed.relaxed_limits = true;
  relaxed.M = 32;
  relaxed.cfl_safety = 5.0;
  CHECK_NOTHROW(relaxed.validate());

  ScenarioSpec unknown;
  unknown.name = "torus";
  CHECK_THROWS_AS(initial_profile(unknown, 3, 64), ConfigError);
}

TEST_CASE("unstable time step ends in blow-up") {
  FlowConfig config = sphere_config(1.0);
  config.relaxed_limits = true;
  config.cfl_safety = 5.0;
  const auto result = run(config);
  CHECK(result.status == ExitStatus::kBlowUp);
  CHECK(result.message.find("halvings") != std::string::npos);
  CHECK(to_string(result.status) == "blow-up");
}

TEST_CASE("stop time is hit exactly") {
  FlowConfig config = sphere_config(1.0);
  config.stop_time = 0.1;
  const auto result = run(config);
  CHECK(result.final_state.profile.t == doctest::Approx(0.1).epsilon(1e-13));
  CHECK_FALSE(result.reached_stop_theta);
  CHECK(result.records.back().t == result.final_state.profile.t);
}

TEST_CASE("identical configs give identical trajectories") {
  FlowConfig config = perturbed_config(0.05, 64);
  config.scenario.name = "sphere";
  config.scenario.noise = 1e-4;
  config.scenario.seed = 42;
  config.stop_time = 0.05;
  std::ostringstream a, b;
  monitors::write_csv(a, run(config).records);
  monitors::write_csv(b, run(config).records);
  CHECK(a.str() == b.str());
  config.scenario.seed = 43;
  std::ostringstream c;
  monitors::write_csv(c, run(config).records);
  CHECK(c.str() != a.str());
}
