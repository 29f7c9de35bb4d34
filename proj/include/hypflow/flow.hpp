#pragma once

// Method-of-lines solver for the graphical contracting flow du/dt = -v F, the exact
// geodesic-sphere solution, and the rescaling towards the round point.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hypflow/geometry.hpp"
#include "hypflow/monitors.hpp"
#include "hypflow/symfunc.hpp"

namespace hypflow::flow {

/// Named initial profiles.
///   sphere:            u = radius (+ seeded noise of the given size)
///   perturbed_sphere:  u = radius + amplitude cos(mode theta)
///   two_mode:          u = radius + amplitude cos(mode theta) + amplitude2 cos(mode2 theta)
struct ScenarioSpec {
  std::string name = "sphere";
  double radius = 1.0;
  double amplitude = 0.0;
  int mode = 2;
  double amplitude2 = 0.0;
  int mode2 = 4;
  double noise = 0.0;
  std::uint64_t seed = 1;
};

/// Throws ConfigError on an unknown name or bad parameters, HypothesisError if the
/// sampled profile is not a positive radial graph.
geometry::AxisymmetricProfile initial_profile(const ScenarioSpec& scenario, int n, int M);

struct FlowConfig {
  symfunc::CurvatureFunctionSpec f_spec = symfunc::CurvatureFunctionSpec::sigma(2);
  int n = 3;
  int M = 256;
  double cfl_safety = 0.1;
  double stop_theta = 0.05;
  std::optional<double> stop_time;
  double epsilon_policy = 0.5;
  ScenarioSpec scenario;
  double cadence_dtau = 0.01;        // record when -log(min u) has advanced by this much
  int profile_every = 10;            // keep every k-th record's profile for output
  int stencil_order = geometry::kDefaultStencilOrder;
  std::optional<double> tso_rho;     // fixed rho for phi; default half the current min u
  std::int64_t max_steps = 100'000'000;
  bool relaxed_limits = false;       // skip the cfl <= 1 and M >= 64 limits (fault injection)

  /// Throws ConfigError.
  void validate() const;
};

struct FlowState {
  geometry::AxisymmetricProfile profile;
  geometry::GeometryCache cache;
  std::int64_t step_index = 0;
  double dt_last = 0.0;
  // Halvings accumulated over consecutive steps that could not be taken at full size;
  // reset by the first full-size step.
  int halving_debt = 0;
};

/// Throws DomainError if the profile leaves the positive cone.
FlowState make_state(geometry::AxisymmetricProfile profile, const FlowConfig& config);

/// log cosh Theta0.
double spherical_extinction_time(double theta0);
/// arccosh(e^-t cosh Theta0). Throws DomainError for t >= T or t < 0 or Theta0 <= 0.
double spherical_theta(double theta0, double t);
/// Comparison radius arccosh(e^(T - t)) for extinction time T. Throws DomainError for t >= T.
double comparison_theta(double extinction_time, double t);

/// cfl_safety dtheta^2 min over the grid of (sinh^2 u + u'^2) / (Fdot_mer + floor).
double stable_dt(const FlowState& state, const FlowConfig& config);

/// One Heun step with dt = min(stable_dt, dt_cap). Rejected trial states are retried
/// with half the step. Throws BlowUpError once the halvings accumulated since the last
/// full-size step exceed 20: a stable scheme never needs them, an unstable one keeps
/// needing them.
FlowState step(const FlowState& state, const FlowConfig& config,
               double dt_cap = std::numeric_limits<double>::infinity());

struct Rescaled {
  double tau = 0.0;
  std::vector<double> u_tilde;
  double osc = 0.0;
};
/// tau = -log Theta, u~ = u / Theta. Throws DomainError if Theta <= 0.
Rescaled rescale(const FlowState& state, double theta);

/// max over the grid of F / (chi - sinh(rho) / 2). Throws ContractError if the
/// denominator is not positive somewhere.
double tso_quantity(const FlowState& state, double rho);

/// Extinction time from a least-squares fit of log cosh(min u) = a + b t on the tail
/// of the records (the last quarter, at least 3). Throws ContractError on empty input.
double fit_extinction_time(std::span<const monitors::MonitorRecord> records);

/// Fills theta, tau and osc_u_tilde from the comparison sphere with the given
/// extinction time. Records at or past extinction keep NaN.
void attach_comparison(std::span<monitors::MonitorRecord> records, double extinction_time);

enum class ExitStatus { kCleanContraction, kInvariantViolation, kBlowUp };
std::string to_string(ExitStatus status);

struct Snapshot {
  double t = 0.0;
  std::vector<double> u;
};

struct RunResult {
  std::vector<monitors::MonitorRecord> records;
  std::vector<Snapshot> snapshots;
  FlowState final_state;
  ExitStatus status = ExitStatus::kCleanContraction;
  std::optional<monitors::TrajectoryVerdict> verdict;
  double extinction_estimate = 0.0;
  double eps0 = 0.0;
  double eps_used = 0.0;
  bool reached_stop_theta = false;
  bool psc_lost = false;
  double psc_lost_time = 0.0;
  bool theorem_conformant = false;
  std::vector<std::string> notes;
  std::string message;
  std::int64_t steps = 0;
  std::int64_t rescued_steps = 0;  // steps that needed at least one halving
};

using StepObserver = std::function<void(const FlowState&)>;

/// Throws ConfigError for invalid configs and HypothesisError when the initial profile
/// does not have positive sectional curvature. Blow-up is reported through status.
RunResult run(const FlowConfig& config, const StepObserver& observer = {});

/// Consistency of the speed evolution
///   dF/dt (normal) = Fdot^{kl} nabla_k nabla_l F + (sum Fdot^i kappa_i^2 - sum Fdot^i) F
/// at the middle of three consecutive states, with dF/dt from the non-uniform
/// three-point difference in time plus the tangential correction of the graph gauge.
struct SpeedResidual {
  std::vector<double> residual;
  double max_abs = 0.0;
  double scale = 0.0;  // max |right-hand side|
  double relative() const noexcept { return max_abs / scale; }
};
/// Throws ContractError unless the times are strictly increasing and the grids match.
SpeedResidual speed_residual(const FlowState& prev, const FlowState& cur, const FlowState& next);

}  // namespace hypflow::flow
