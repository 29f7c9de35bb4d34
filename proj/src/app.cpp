#include "hypflow/app.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "hypflow/errors.hpp"
#include "hypflow/flow.hpp"
#include "hypflow/monitors.hpp"
#include "hypflow/oracle.hpp"
#include "hypflow/spec_grammar.hpp"
#include "hypflow/symfunc.hpp"

namespace hypflow::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kOracleThreshold = 1e-6;

int exit_code_of(flow::ExitStatus status) {
  switch (status) {
    case flow::ExitStatus::kCleanContraction: return kExitOk;
    case flow::ExitStatus::kInvariantViolation: return kExitFailure;
    case flow::ExitStatus::kBlowUp: return kExitBlowUp;
  }
  return kExitFailure;
}

std::string fmt(const char* pattern, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, x);
  return buf;
}

json verdict_json(const flow::RunResult& r, const config::ScenarioConfig& c) {
  json j;
  j["status"] = flow::to_string(r.status);
  j["theorem_conformant"] = r.theorem_conformant;
  j["notes"] = r.notes;
  j["message"] = r.message;
  j["steps"] = r.steps;
  j["rescued_steps"] = r.rescued_steps;
  j["t_final"] = r.final_state.profile.t;
  j["reached_stop_theta"] = r.reached_stop_theta;
  j["psc_lost"] = r.psc_lost;
  if (r.psc_lost) j["psc_lost_time"] = r.psc_lost_time;
  j["extinction_estimate"] = r.extinction_estimate;
  j["eps0"] = r.eps0;
  j["eps_used"] = r.eps_used;
  if (r.verdict) {
    const auto& v = *r.verdict;
    j["verdict"] = {
        {"minF_monotone", v.minF_monotone},
        {"pinching_bound", v.pinching_bound},
        {"G_positive", v.G_positive},
        {"psc_preserved", v.psc_preserved},
        {"osc_decay", v.osc_decay},
        {"roundness_decay", v.roundness_decay},
        {"passed", v.passed()},
        {"worst_minF_drop", v.worst_minF_drop},
        {"t_worst_minF_drop", v.t_worst_minF_drop},
        {"pinching_constant", v.pinching_constant},
        {"max_kappa_ratio", v.max_kappa_ratio},
        {"t_max_kappa_ratio", v.t_max_kappa_ratio},
        {"min_g_margin", v.min_g_margin},
        {"t_min_g_margin", v.t_min_g_margin},
        {"min_psc_margin", v.min_psc_margin},
        {"t_min_psc_margin", v.t_min_psc_margin},
        {"osc_initial", v.osc_initial},
        {"osc_final", v.osc_final},
        {"osc_slope", v.osc_slope},
        {"roundness_initial", v.roundness_initial},
        {"roundness_final", v.roundness_final},
    };
  } else {
    j["verdict"] = nullptr;
  }
  const auto& f = c.flow;
  j["config"] = {
      {"f_spec", symfunc::to_string(f.f_spec)},
      {"n", f.n},
      {"M", f.M},
      {"cfl_safety", f.cfl_safety},
      {"stop_theta", f.stop_theta},
      {"epsilon_policy", f.epsilon_policy},
      {"stencil_order", f.stencil_order},
      {"scenario", f.scenario.name},
      {"radius", f.scenario.radius},
      {"amplitude", f.scenario.amplitude},
      {"mode", f.scenario.mode},
      {"amplitude2", f.scenario.amplitude2},
      {"mode2", f.scenario.mode2},
      {"noise", f.scenario.noise},
      {"seed", f.scenario.seed},
  };
  return j;
}

void write_profiles(std::ostream& out, const flow::RunResult& r) {
  for (const auto& snap : r.snapshots) {
    json line;
    line["t"] = snap.t;
    line["u"] = snap.u;
    const double T = r.extinction_estimate;
    if (std::isfinite(T) && snap.t < T) {
      const double theta = flow::comparison_theta(T, snap.t);
      std::vector<double> tilde(snap.u.size());
      for (std::size_t m = 0; m < tilde.size(); ++m) tilde[m] = snap.u[m] / theta;
      line["theta"] = theta;
      line["u_tilde"] = tilde;
    } else {
      line["theta"] = nullptr;
      line["u_tilde"] = nullptr;
    }
    out << line.dump() << '\n';
  }
}

void write_plot_data(const fs::path& dir, const flow::RunResult& r) {
  std::ofstream osc(dir / "plot_osc_tau.csv");
  osc << "tau,osc_u_tilde\n";
  std::ofstream radii(dir / "plot_radii.csv");
  radii << "t,theta,min_u,max_u\n";
  auto num = [](double x) { return fmt("%.17g", x); };
  for (const auto& rec : r.records) {
    if (std::isfinite(rec.tau) && std::isfinite(rec.osc_u_tilde))
      osc << num(rec.tau) << ',' << num(rec.osc_u_tilde) << '\n';
    radii << num(rec.t) << ',' << num(rec.theta) << ',' << num(rec.min_u) << ','
          << num(rec.max_u) << '\n';
  }
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const HypothesisError& e) {
    err << "hypothesis error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const BlowUpError& e) {
    err << "blow-up: " << e.what() << '\n';
    return kExitBlowUp;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int severity(int code) {
  switch (code) {
    case kExitOk: return 0;
    case kExitFailure: return 1;
    case kExitBlowUp: return 2;
    default: return 3;
  }
}

}  // namespace

fs::path default_output_root() {
  if (const char* root = std::getenv("HYPFLOW_OUTPUT_ROOT"); root && *root) return root;
  return "hypflow-out";
}

int simulate_config(const config::ScenarioConfig& c, const fs::path& out_dir, std::ostream& out,
                    std::ostream& err) {
  return guarded(err, [&] {
    const auto result = flow::run(c.flow);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
    if (c.output.csv) {
      std::ofstream f(out_dir / "trajectory.csv");
      monitors::write_csv(f, result.records);
    }
    if (c.output.jsonl) {
      std::ofstream f(out_dir / "profiles.jsonl");
      write_profiles(f, result);
    }
    if (c.output.json) {
      std::ofstream f(out_dir / "verdict.json");
      f << verdict_json(result, c).dump(2) << '\n';
    }
    if (c.output.emit_plot_data) write_plot_data(out_dir, result);

    out << "hypflow: " << flow::to_string(result.status)
        << " f=" << symfunc::to_string(c.flow.f_spec) << " n=" << c.flow.n << " M=" << c.flow.M
        << " steps=" << result.steps << " t=" << fmt("%.6f", result.final_state.profile.t)
        << " T_fit=" << fmt("%.6f", result.extinction_estimate)
        << " verdict=" << (result.verdict && result.verdict->passed() ? "pass" : "fail")
        << (result.theorem_conformant ? "" : " (not theorem-conformant)") << " out=" << out_dir.string()
        << '\n';
    if (!result.message.empty()) err << "hypflow: " << result.message << '\n';
    for (const auto& note : result.notes) err << "note: " << note << '\n';
    return exit_code_of(result.status);
  });
}

int simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err) {
  config::ScenarioConfig c;
  const int parsed = guarded(err, [&] {
    c = config::load(options.config_path);
    return kExitOk;
  });
  if (parsed != kExitOk) return parsed;
  if (options.seed) c.flow.scenario.seed = *options.seed;
  if (options.emit_plot_data) c.output.emit_plot_data = true;
  fs::path dir;
  if (options.out_dir)
    dir = *options.out_dir;
  else if (!c.output.directory.empty())
    dir = c.output.directory;
  else
    dir = default_output_root() / options.config_path.stem();
  return simulate_config(c, dir, out, err);
}

int verify_assumption(const std::string& spec_text, int n, std::int64_t samples, std::uint64_t seed,
                      std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto spec = symfunc::parse_spec(spec_text);
    const auto rep = symfunc::check_assumption(spec, n, samples, seed);
    json j = {
        {"spec", symfunc::to_string(spec)},
        {"dimension", rep.dimension},
        {"samples", rep.samples},
        {"seed", rep.seed},
        {"monotone_ok", rep.monotone_ok},
        {"homogeneous_ok", rep.homogeneous_ok},
        {"normalized_ok", rep.normalized_ok},
        {"quadform_ok", rep.quadform_ok},
        {"logconvex_ok", rep.logconvex_ok},
        {"all_ok", rep.all_ok()},
        {"worst_margin", rep.worst_margin},
        {"worst_kappa", rep.worst_kappa},
        {"worst_y", rep.worst_y},
        {"min_gradient", rep.min_gradient},
        {"worst_homogeneity_residual", rep.worst_homogeneity_residual},
        {"worst_euler_residual", rep.worst_euler_residual},
        {"normalization_residual", rep.normalization_residual},
        {"min_log_hessian_eigenvalue", rep.min_log_hessian_eigenvalue},
    };
    out << j.dump(2) << '\n';
    return rep.all_ok() ? kExitOk : kExitFailure;
  });
}

int oracle_check(const std::string& profile, int M, double h_step, int n, bool inject_sign_fault,
                 std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (M < geometry::kMinGridIntervals)
      throw ConfigError("M must be >= " + std::to_string(geometry::kMinGridIntervals));
    oracle::OracleOptions opts;
    opts.flip_orientation = inject_sign_fault;
    oracle::CrossCheck cc;
    try {
      cc = oracle::cross_check(oracle::test_profile(profile), n, M, h_step, opts);
    } catch (const ContractError& e) {
      throw ConfigError(e.what());
    }
    const bool ok = cc.max_relative_discrepancy <= kOracleThreshold;
    out << "oracle-check: profile=" << profile << " n=" << n << " M=" << M
        << " h_step=" << fmt("%g", h_step)
        << " max_relative_discrepancy=" << fmt("%.3e", cc.max_relative_discrepancy)
        << " worst_theta=" << fmt("%.6f", cc.worst_theta) << " nodes=" << cc.nodes_compared
        << (ok ? " PASS" : " FAIL") << " (threshold " << fmt("%g", kOracleThreshold) << ")\n";
    return ok ? kExitOk : kExitFailure;
  });
}

int suite(const acceptance::Options& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    out << "criterion | result | measured\n";
    const auto report = acceptance::run(options, [&](const acceptance::CriterionResult& r) {
      out << acceptance::format_line(r) << '\n';
      out.flush();
    });
    const auto passed = std::count_if(report.criteria.begin(), report.criteria.end(),
                                      [](const auto& c) { return c.passed; });
    out << "suite: " << passed << "/" << report.criteria.size() << " criteria passed\n";
    if (report.sphere_blew_up) {
      err << "suite: the sphere regression run blew up\n";
      return kExitBlowUp;
    }
    return report.passed() ? kExitOk : kExitFailure;
  });
}

int sweep(const SweepOptions& options, std::ostream& out, std::ostream& err) {
  struct Job {
    config::ScenarioConfig config;
    fs::path dir;
    std::string label;
  };
  std::vector<Job> jobs;
  const fs::path root = options.out_root.value_or(default_output_root());
  for (const auto& path : options.configs) {
    config::ScenarioConfig base;
    const int parsed = guarded(err, [&] {
      base = config::load(path);
      return kExitOk;
    });
    if (parsed != kExitOk) return parsed;
    if (options.seed) base.flow.scenario.seed = *options.seed;
    if (options.f_specs.empty()) {
      jobs.push_back({base, root / path.stem(), path.stem().string()});
      continue;
    }
    for (std::size_t i = 0; i < options.f_specs.size(); ++i) {
      Job job{base, root / (path.stem().string() + "-" + std::to_string(i)), ""};
      const int ok = guarded(err, [&] {
        job.config.flow.f_spec = symfunc::parse_spec(options.f_specs[i]);
        job.config.flow.validate();
        return kExitOk;
      });
      if (ok != kExitOk) return ok;
      job.label = path.stem().string() + " " + options.f_specs[i];
      jobs.push_back(std::move(job));
    }
  }

  std::vector<int> codes(jobs.size(), kExitOk);
  std::vector<std::string> outs(jobs.size()), errs(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      std::ostringstream o, e;
      codes[i] = simulate_config(jobs[i].config, jobs[i].dir, o, e);
      outs[i] = o.str();
      errs[i] = e.str();
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t pool =
      std::min<std::size_t>(jobs.size(), options.jobs > 0 ? options.jobs : hw);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t + 1 < pool; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  int worst = kExitOk;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    out << "[" << jobs[i].label << "] exit " << codes[i] << ": " << outs[i];
    err << errs[i];
    if (severity(codes[i]) > severity(worst)) worst = codes[i];
  }
  return worst;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App cli{"Contracting curvature flows of axisymmetric hypersurfaces in hyperbolic space"};
  cli.require_subcommand(1);

  SimulateOptions sim;
  std::string out_dir;
  std::uint64_t seed = 0;
  auto* c_sim = cli.add_subcommand("simulate", "Run one scenario config and write its artifacts");
  c_sim->add_option("config", sim.config_path, "INI scenario file")->required();
  c_sim->add_option("--out", out_dir, "Output directory (default: $HYPFLOW_OUTPUT_ROOT/<config name>)");
  auto* sim_seed = c_sim->add_option("--seed", seed, "Seed for the scenario noise sampler");
  c_sim->add_flag("--emit-plot-data", sim.emit_plot_data, "Also write (tau, osc) and radius tables");

  std::string spec_text;
  int va_n = 3;
  std::int64_t samples = 10000;
  std::uint64_t va_seed = 1;
  auto* c_va = cli.add_subcommand("verify-assumption", "Sample the admissibility conditions of a speed");
  c_va->add_option("spec", spec_text, "Speed, e.g. 'sigma(k=2)'")->required();
  c_va->add_option("--n", va_n, "Dimension")->capture_default_str();
  c_va->add_option("--samples", samples, "Sample count")->capture_default_str();
  c_va->add_option("--seed", va_seed, "Sampler seed")->capture_default_str();

  std::string profile;
  int oc_M = 512, oc_n = 3;
  double h_step = 1e-4;
  bool sign_fault = false;
  auto* c_oc = cli.add_subcommand("oracle-check", "Compare grid curvatures with the hyperboloid oracle");
  c_oc->add_option("profile", profile, "sphere, sphere_small, perturbed, two_mode or mode3")->required();
  c_oc->add_option("--M", oc_M, "Grid intervals")->capture_default_str();
  c_oc->add_option("--h-step", h_step, "Oracle difference step")->capture_default_str();
  c_oc->add_option("--n", oc_n, "Dimension")->capture_default_str();
  c_oc->add_flag("--inject-sign-fault", sign_fault)->group("");

  acceptance::Options suite_opts;
  double suite_cfl = 0.0;
  int suite_M = 0;
  auto* c_suite = cli.add_subcommand("suite", "Run the acceptance battery");
  auto* o_cfl = c_suite->add_option("--cfl", suite_cfl, "Override cfl_safety of every flow run");
  auto* o_M = c_suite->add_option("--M", suite_M, "Override the grid of the sphere, suite and oracle runs");
  c_suite->add_option("--seed", suite_opts.seed, "Seed for the sampled criteria")->capture_default_str();

  SweepOptions sw;
  std::string sw_root;
  std::uint64_t sw_seed = 0;
  auto* c_sw = cli.add_subcommand("sweep", "Run several configs concurrently");
  c_sw->add_option("configs", sw.configs, "INI scenario files")->required();
  c_sw->add_option("--f-spec", sw.f_specs, "Run every config once per speed");
  c_sw->add_option("--out", sw_root, "Output root (default: $HYPFLOW_OUTPUT_ROOT)");
  auto* sw_seed_opt = c_sw->add_option("--seed", sw_seed, "Seed for the scenario noise samplers");
  c_sw->add_option("--jobs", sw.jobs, "Worker threads (default: hardware concurrency)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*c_sim) {
    if (!out_dir.empty()) sim.out_dir = out_dir;
    if (*sim_seed) sim.seed = seed;
    return simulate(sim, out, err);
  }
  if (*c_va) return verify_assumption(spec_text, va_n, samples, va_seed, out, err);
  if (*c_oc) return oracle_check(profile, oc_M, h_step, oc_n, sign_fault, out, err);
  if (*c_suite) {
    if (*o_cfl) suite_opts.cfl = suite_cfl;
    if (*o_M) suite_opts.M = suite_M;
    return suite(suite_opts, out, err);
  }
  if (!sw_root.empty()) sw.out_root = sw_root;
  if (*sw_seed_opt) sw.seed = sw_seed;
  return sweep(sw, out, err);
}

}  // namespace hypflow::app
