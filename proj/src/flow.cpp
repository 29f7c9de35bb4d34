#include "hypflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "hypflow/errors.hpp"

namespace hypflow::flow {

namespace {

constexpr double kFdotFloor = 1e-12;
constexpr int kMaxHalvings = 20;

double min_of(const std::vector<double>& x) { return *std::min_element(x.begin(), x.end()); }
double max_of(const std::vector<double>& x) { return *std::max_element(x.begin(), x.end()); }

// Graph velocity -v F.
std::vector<double> velocity(const geometry::GeometryCache& c) {
  std::vector<double> out(c.u.size());
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = -c.v[m] * c.f[m];
  return out;
}

}  // namespace

geometry::AxisymmetricProfile initial_profile(const ScenarioSpec& s, int n, int M) {
  if (!(s.radius > 0.0) || !std::isfinite(s.radius))
    throw ConfigError("scenario radius must be positive, got " + std::to_string(s.radius));
  if (s.mode < 0 || s.mode2 < 0) throw ConfigError("scenario mode numbers must be >= 0");
  if (!std::isfinite(s.amplitude) || !std::isfinite(s.amplitude2) || !(s.noise >= 0.0))
    throw ConfigError("scenario amplitudes must be finite and noise nonnegative");
  if (M < 1) throw ConfigError("grid size M must be positive");

  geometry::AxisymmetricProfile p;
  p.n = n;
  p.u.resize(M + 1);
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  for (int m = 0; m <= M; ++m) {
    const double th = p.theta(m);
    double u = s.radius;
    if (s.name == "sphere") {
      if (s.noise > 0.0) u += s.noise * jitter(rng);
    } else if (s.name == "perturbed_sphere") {
      u += s.amplitude * std::cos(s.mode * th);
    } else if (s.name == "two_mode") {
      u += s.amplitude * std::cos(s.mode * th) + s.amplitude2 * std::cos(s.mode2 * th);
    } else {
      throw ConfigError("unknown scenario '" + s.name +
                        "' (known: sphere, perturbed_sphere, two_mode)");
    }
    if (!(u > 0.0))
      throw HypothesisError("initial profile is not a positive radial graph (u = " +
                            std::to_string(u) + " at theta = " + std::to_string(th) + ")");
    p.u[m] = u;
  }
  return p;
}

void FlowConfig::validate() const {
  if (n < 2 || n > symfunc::kMaxDimension)
    throw ConfigError("n must be in [2, " + std::to_string(symfunc::kMaxDimension) + "], got " +
                      std::to_string(n));
  f_spec.validate_for(n);
  const int min_m = relaxed_limits ? geometry::kMinGridIntervals : 64;
  if (M < min_m)
    throw ConfigError("M must be >= " + std::to_string(min_m) + " for simulation runs, got " +
                      std::to_string(M));
  if (!(cfl_safety > 0.0) || !std::isfinite(cfl_safety) || (!relaxed_limits && cfl_safety > 1.0))
    throw ConfigError("cfl_safety must be in (0, 1], got " + std::to_string(cfl_safety));
  if (!(stop_theta > 0.0) || !std::isfinite(stop_theta))
    throw ConfigError("stop_theta must be positive");
  if (stop_time && !(*stop_time > 0.0)) throw ConfigError("stop_time must be positive");
  if (!(epsilon_policy > 0.0 && epsilon_policy < 1.0))
    throw ConfigError("epsilon_policy must be in (0, 1), got " + std::to_string(epsilon_policy));
  if (!(cadence_dtau > 0.0)) throw ConfigError("cadence must be positive");
  if (profile_every < 1) throw ConfigError("profile_every must be >= 1");
  if (stencil_order != 2 && stencil_order != 4)
    throw ConfigError("stencil_order must be 2 or 4");
  if (tso_rho && !(*tso_rho > 0.0)) throw ConfigError("tso_rho must be positive");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
}

FlowState make_state(geometry::AxisymmetricProfile profile, const FlowConfig& config) {
  FlowState s;
  s.cache = geometry::build_cache(profile, config.f_spec, config.stencil_order);
  s.profile = std::move(profile);
  return s;
}

double spherical_extinction_time(double theta0) {
  if (!(theta0 > 0.0)) throw DomainError("sphere radius must be positive");
  return std::log(std::cosh(theta0));
}

double comparison_theta(double extinction_time, double t) {
  const double remaining = extinction_time - t;
  if (!(remaining > 0.0))
    throw DomainError("comparison sphere is extinct at t = " + std::to_string(t) +
                      " (T = " + std::to_string(extinction_time) + ")");
  // arccosh(1 + d) with d = e^remaining - 1, written to stay accurate as d -> 0.
  const double d = std::expm1(remaining);
  return std::log1p(d + std::sqrt(d * (d + 2.0)));
}

double spherical_theta(double theta0, double t) {
  if (t < 0.0) throw DomainError("spherical_theta: t must be >= 0");
  return comparison_theta(spherical_extinction_time(theta0), t);
}

double stable_dt(const FlowState& state, const FlowConfig& config) {
  const auto& c = state.cache;
  double worst = std::numeric_limits<double>::infinity();
  for (int m = 0; m < c.size(); ++m)
    worst = std::min(worst, c.metric_a[m] / (c.fdot_mer[m] + kFdotFloor));
  return config.cfl_safety * c.dtheta * c.dtheta * worst;
}

FlowState step(const FlowState& state, const FlowConfig& config, double dt_cap) {
  double dt = std::min(stable_dt(state, config), dt_cap);
  const auto k0 = velocity(state.cache);
  const std::size_t size = k0.size();
  for (int halvings = 0; state.halving_debt + halvings <= kMaxHalvings; ++halvings, dt *= 0.5) {
    try {
      geometry::AxisymmetricProfile trial = state.profile;
      for (std::size_t m = 0; m < size; ++m) trial.u[m] += dt * k0[m];
      const auto stage = geometry::build_cache(trial, config.f_spec, config.stencil_order);
      const auto k1 = velocity(stage);
      for (std::size_t m = 0; m < size; ++m)
        trial.u[m] = state.profile.u[m] + 0.5 * dt * (k0[m] + k1[m]);
      trial.t = state.profile.t + dt;
      FlowState next = make_state(std::move(trial), config);
      next.step_index = state.step_index + 1;
      next.dt_last = dt;
      next.halving_debt = halvings == 0 ? 0 : state.halving_debt + halvings;
      return next;
    } catch (const DomainError&) {
      // Trial state left the admissible set; retry with a smaller step.
    }
  }
  throw BlowUpError("time step underflow after " + std::to_string(kMaxHalvings) +
                        " halvings at t = " + std::to_string(state.profile.t),
                    state.profile.t);
}

Rescaled rescale(const FlowState& state, double theta) {
  if (!(theta > 0.0)) throw DomainError("rescale: Theta must be positive");
  Rescaled r;
  r.tau = -std::log(theta);
  r.u_tilde.resize(state.profile.u.size());
  for (std::size_t m = 0; m < r.u_tilde.size(); ++m) r.u_tilde[m] = state.profile.u[m] / theta;
  r.osc = max_of(r.u_tilde) - min_of(r.u_tilde);
  return r;
}

double tso_quantity(const FlowState& state, double rho) {
  const auto& c = state.cache;
  const double shift = 0.5 * std::sinh(rho);
  double phi = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < c.size(); ++m) {
    const double denom = c.chi[m] - shift;
    if (!(denom > 0.0))
      throw ContractError("tso_quantity: chi - sinh(rho)/2 <= 0 at theta = " +
                          std::to_string(c.theta[m]) + "; rho = " + std::to_string(rho) +
                          " is too large");
    phi = std::max(phi, c.f[m] / denom);
  }
  return phi;
}

double fit_extinction_time(std::span<const monitors::MonitorRecord> records) {
  if (records.empty()) throw ContractError("fit_extinction_time: no records");
  auto y_of = [](const monitors::MonitorRecord& r) { return std::log(std::cosh(r.min_u)); };
  if (records.size() == 1) return records.front().t + y_of(records.front());
  const std::size_t tail = std::min(records.size(), std::max<std::size_t>(3, records.size() / 4));
  const auto fit = records.last(tail);
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (const auto& r : fit) {
    const double y = y_of(r);
    st += r.t, sy += y, stt += r.t * r.t, sty += r.t * y;
  }
  const double k = static_cast<double>(tail);
  const double denom = k * stt - st * st;
  if (!(denom > 0.0)) return records.back().t + y_of(records.back());
  const double b = (k * sty - st * sy) / denom;
  const double a = (sy - b * st) / k;
  if (!(b < 0.0)) return std::numeric_limits<double>::infinity();
  return -a / b;
}

void attach_comparison(std::span<monitors::MonitorRecord> records, double extinction_time) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto& r : records) {
    if (std::isfinite(extinction_time) && r.t < extinction_time) {
      r.theta = comparison_theta(extinction_time, r.t);
      r.tau = -std::log(r.theta);
      r.osc_u_tilde = (r.max_u - r.min_u) / r.theta;
    } else {
      r.theta = r.tau = r.osc_u_tilde = nan;
    }
  }
}

std::string to_string(ExitStatus status) {
  switch (status) {
    case ExitStatus::kCleanContraction: return "clean-contraction";
    case ExitStatus::kInvariantViolation: return "invariant-violation";
    case ExitStatus::kBlowUp: return "blow-up";
  }
  return "unknown";
}

RunResult run(const FlowConfig& config, const StepObserver& observer) {
  config.validate();
  auto profile = initial_profile(config.scenario, config.n, config.M);

  RunResult result;
  FlowState state;
  try {
    state = make_state(std::move(profile), config);
  } catch (const DomainError& e) {
    throw HypothesisError(
        std::string("initial data violates the positive sectional curvature hypothesis: ") +
        e.what());
  }
  if (!state.cache.positive_sectional)
    throw HypothesisError(
        "initial data violates the positive sectional curvature hypothesis "
        "(min kappa_i kappa_j = " +
        std::to_string(state.cache.min_pair_product) + " <= 1)");
  result.eps0 = monitors::epsilon0(state.cache);
  result.eps_used = config.epsilon_policy * result.eps0;
  result.theorem_conformant = config.n >= 3;
  if (config.n < 3)
    result.notes.push_back("n = " + std::to_string(config.n) +
                           " is below the theorem's range n >= 3; run is not theorem-conformant");
  if (!config.f_spec.strictly_concave())
    result.notes.push_back("speed is not strictly concave; the roundness clause is informational");

  auto rho_for = [&](const FlowState& s) {
    return config.tso_rho.value_or(0.5 * min_of(s.profile.u));
  };
  auto record = [&](const FlowState& s) {
    result.records.push_back(
        monitors::observe(s.cache, s.profile.t, result.eps0, result.eps_used, rho_for(s)));
    if ((result.records.size() - 1) % config.profile_every == 0)
      result.snapshots.push_back({s.profile.t, s.profile.u});
  };

  record(state);
  double last_level = -std::log(min_of(state.profile.u));
  auto stop_time_reached = [&](double t) {
    return config.stop_time && t >= *config.stop_time * (1.0 - 1e-14);
  };

  while (true) {
    const double min_u = min_of(state.profile.u);
    if (min_u <= config.stop_theta) {
      result.reached_stop_theta = true;
      break;
    }
    if (stop_time_reached(state.profile.t)) break;
    if (state.step_index >= config.max_steps) {
      result.status = ExitStatus::kBlowUp;
      result.message = "step budget of " + std::to_string(config.max_steps) + " exhausted";
      break;
    }
    const double cap = config.stop_time ? *config.stop_time - state.profile.t
                                        : std::numeric_limits<double>::infinity();
    try {
      state = step(state, config, cap);
    } catch (const BlowUpError& e) {
      result.status = ExitStatus::kBlowUp;
      result.message = e.what();
      break;
    }
    if (state.halving_debt > 0) ++result.rescued_steps;
    if (observer) observer(state);
    if (!state.cache.positive_sectional && !result.psc_lost) {
      result.psc_lost = true;
      result.psc_lost_time = state.profile.t;
    }
    const double u_now = min_of(state.profile.u);
    const double level = -std::log(u_now);
    if (level - last_level >= config.cadence_dtau || u_now <= config.stop_theta ||
        stop_time_reached(state.profile.t)) {
      record(state);
      last_level = level;
    }
  }
  if (result.records.back().t != state.profile.t) record(state);
  if (result.snapshots.back().t != state.profile.t)
    result.snapshots.push_back({state.profile.t, state.profile.u});
  result.steps = state.step_index;

  if (result.records.size() >= 2) {
    result.extinction_estimate = fit_extinction_time(result.records);
    attach_comparison(result.records, result.extinction_estimate);
    result.verdict = monitors::verdict(result.records, config.n);
  }
  if (result.status != ExitStatus::kBlowUp) {
    if (result.psc_lost || !result.verdict || !result.verdict->passed())
      result.status = ExitStatus::kInvariantViolation;
  }
  if (result.psc_lost)
    result.notes.push_back("positive sectional curvature lost at t = " +
                           std::to_string(result.psc_lost_time));
  result.final_state = std::move(state);
  return result;
}

SpeedResidual speed_residual(const FlowState& prev, const FlowState& cur, const FlowState& next) {
  const double t0 = prev.profile.t, t1 = cur.profile.t, t2 = next.profile.t;
  if (!(t0 < t1 && t1 < t2)) throw ContractError("speed_residual: times must increase");
  if (prev.cache.size() != cur.cache.size() || next.cache.size() != cur.cache.size())
    throw ContractError("speed_residual: grid sizes differ");
  const double h1 = t1 - t0, h2 = t2 - t1;
  const double w0 = -h2 / (h1 * (h1 + h2));
  const double w1 = (h2 - h1) / (h1 * h2);
  const double w2 = h1 / (h2 * (h1 + h2));

  const auto& c = cur.cache;
  const auto diffusion = geometry::covariant_hessian_F(cur.profile, c);
  const auto df = geometry::grid_derivatives(c.f, c.stencil_order);
  SpeedResidual r;
  r.residual.resize(c.size());
  for (int m = 0; m < c.size(); ++m) {
    const double dfdt = w0 * prev.cache.f[m] + w1 * c.f[m] + w2 * next.cache.f[m];
    const double s = std::sinh(c.u[m]);
    // Points of the normal flow drift in theta at rate F u' / (v sinh^2 u).
    const double normal_dfdt = dfdt + c.f[m] * c.du[m] * df.first[m] / (c.v[m] * s * s);
    const double sum_k2 = c.fdot_mer[m] * c.kappa_mer[m] * c.kappa_mer[m] +
                          (c.n - 1) * c.fdot_rot[m] * c.kappa_rot[m] * c.kappa_rot[m];
    const double sum_fdot = c.fdot_mer[m] + (c.n - 1) * c.fdot_rot[m];
    const double rhs = diffusion[m] + (sum_k2 - sum_fdot) * c.f[m];
    r.residual[m] = normal_dfdt - rhs;
    r.max_abs = std::max(r.max_abs, std::abs(r.residual[m]));
    r.scale = std::max(r.scale, std::abs(rhs));
  }
  return r;
}

}  // namespace hypflow::flow
