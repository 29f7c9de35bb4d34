#include "hypflow/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "hypflow/app.hpp"
#include "hypflow/errors.hpp"
#include "hypflow/flow.hpp"
#include "hypflow/oracle.hpp"
#include "hypflow/spec_grammar.hpp"
#include "hypflow/symfunc.hpp"

namespace hypflow::acceptance {

namespace fs = std::filesystem;
using flow::ExitStatus;
using flow::FlowConfig;
using flow::FlowState;
using symfunc::CurvatureFunctionSpec;

namespace {

constexpr double kTheta0 = 1.0;
constexpr double kSphereErrorLimit = 1e-4;
constexpr double kExtinctionLimit = 1e-3;
constexpr double kSphereSeconds = 10.0;
constexpr double kOrderLimit = 1.8;
constexpr double kSuiteSeconds = 60.0;
constexpr double kSymSeconds = 30.0;
constexpr double kMatrixTolerance = 1e-6;
constexpr double kOracleTolerance = 1e-6;
constexpr double kResidualPerDt = 2.0;
constexpr double kResidualRatio = 2.8;
constexpr double kTsoRho = 0.25;

std::string fmt(const char* pattern, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, x);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

FlowConfig sphere_config(const Options& o, int M) {
  FlowConfig c;
  c.M = M;
  c.scenario.name = "sphere";
  c.scenario.radius = kTheta0;
  if (o.cfl) c.cfl_safety = *o.cfl;
  c.relaxed_limits = o.cfl.has_value() || o.M.has_value();
  return c;
}

FlowConfig perturbed_config(const Options& o, const CurvatureFunctionSpec& f, int M) {
  FlowConfig c;
  c.f_spec = f;
  c.M = M;
  c.scenario.name = "perturbed_sphere";
  c.scenario.radius = 1.0;
  c.scenario.amplitude = 0.05;
  c.scenario.mode = 2;
  if (o.cfl) c.cfl_safety = *o.cfl;
  c.relaxed_limits = o.cfl.has_value() || o.M.has_value();
  return c;
}

struct SphereRun {
  flow::RunResult result;
  double max_error = 0.0;
  double worst_residual_per_dt = 0.0;
  int residual_windows = 0;
  double seconds = 0.0;
};

// Tracks |u - Theta(t)| every step; with residuals, also samples the speed-evolution
// residual on three consecutive states every tenth step.
SphereRun run_sphere(const FlowConfig& config, bool residuals) {
  SphereRun out;
  std::vector<FlowState> window;
  Stopwatch clock;
  out.result = flow::run(config, [&](const FlowState& s) {
    const double exact = flow::spherical_theta(kTheta0, s.profile.t);
    for (double u : s.profile.u) out.max_error = std::max(out.max_error, std::abs(u - exact));
    if (!residuals) return;
    if (s.step_index % 10 == 0) window.clear();
    if (s.step_index % 10 > 2 || (window.empty() && s.step_index % 10 != 0)) return;
    window.push_back(s);
    if (window.size() == 3) {
      const auto r = flow::speed_residual(window[0], window[1], window[2]);
      out.worst_residual_per_dt = std::max(out.worst_residual_per_dt, r.relative() / window[2].dt_last);
      ++out.residual_windows;
      window.clear();
    }
  });
  out.seconds = clock.seconds();
  return out;
}

const char* verdict_word(bool b) { return b ? "ok" : "FAIL"; }

// Second central difference of F at the eigenvalues of diag(kappa) + s B, two Richardson levels.
double matrix_fd(const CurvatureFunctionSpec& spec, const std::vector<double>& kappa,
                 const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd A = Eigen::VectorXd::Map(kappa.data(), kappa.size()).asDiagonal();
  auto f = [&](double s) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A + s * B, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = es.eigenvalues();
    return symfunc::evaluate(spec, std::span<const double>(ev.data(), ev.size()));
  };
  const double f0 = f(0.0);
  auto second = [&](double h) { return (f(h) - 2 * f0 + f(-h)) / (h * h); };
  const double s1 = second(1e-2), s2 = second(2e-2), s4 = second(4e-2);
  const double r1 = (4 * s1 - s2) / 3, r2 = (4 * s2 - s4) / 3;
  return (16 * r1 - r2) / 15;
}

CriterionResult criterion(int id, std::string title) {
  CriterionResult r;
  r.id = id;
  r.title = std::move(title);
  return r;
}

}  // namespace

bool Report::passed() const noexcept {
  return !criteria.empty() &&
         std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.passed; });
}

std::string format_line(const CriterionResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "criterion %2d %s  %-28s ", r.id, r.passed ? "PASS" : "FAIL",
                r.title.c_str());
  return head + r.measured + fmt("  [%.1f s]", r.seconds);
}

Report run(const Options& options, const Progress& progress) {
  Report report;
  const int sphere_M = options.M.value_or(256);
  const int suite_M = options.M.value_or(128);
  const int oracle_M = options.M.value_or(512);

  auto finish = [&](CriterionResult r, const Stopwatch& clock) {
    r.seconds = clock.seconds();
    report.criteria.push_back(r);
    if (progress) progress(report.criteria.back());
  };
  // A criterion that throws fails with the message as its measurement.
  auto guarded = [&](CriterionResult r, auto&& body) {
    Stopwatch clock;
    try {
      body(r);
    } catch (const std::exception& e) {
      r.passed = false;
      r.measured = std::string("error: ") + e.what();
    }
    finish(std::move(r), clock);
  };

  // 1, 8 (sphere part) and 9 share one sphere run.
  SphereRun sphere;
  bool sphere_ok = false;
  std::string sphere_error;
  try {
    FlowConfig c = sphere_config(options, sphere_M);
    c.tso_rho = kTsoRho;
    sphere = run_sphere(c, true);
    sphere_ok = true;
    report.sphere_blew_up = sphere.result.status == ExitStatus::kBlowUp;
  } catch (const std::exception& e) {
    sphere_error = std::string("error: ") + e.what();
  }

  {
    auto r = criterion(1, "sphere regression");
    if (!sphere_ok) {
      r.measured = sphere_error;
    } else {
      const double T_exact = flow::spherical_extinction_time(kTheta0);
      const double T_err = std::abs(sphere.result.extinction_estimate - T_exact);
      const bool clean = sphere.result.status == ExitStatus::kCleanContraction &&
                         sphere.result.reached_stop_theta;
      r.passed = clean && sphere.max_error <= kSphereErrorLimit && T_err <= kExtinctionLimit &&
                 sphere.seconds <= kSphereSeconds;
      r.measured = "M=" + std::to_string(sphere_M) + " status=" + flow::to_string(sphere.result.status) +
                   " max|u-Theta|=" + fmt("%.3e", sphere.max_error) + " (<= 1e-4)" +
                   " T_fit=" + fmt("%.9f", sphere.result.extinction_estimate) + " |T-log cosh 1|=" +
                   fmt("%.2e", T_err) + " (<= 1e-3) run=" + fmt("%.2f", sphere.seconds) + " s (<= 10 s)";
    }
    r.seconds = sphere.seconds;
    report.criteria.push_back(r);
    if (progress) progress(r);
  }

  guarded(criterion(2, "convergence order"), [&](CriterionResult& r) {
    const std::vector<int> grids{128, 256, 512};
    std::vector<double> errors;
    bool clean = true;
    for (int M : grids) {
      if (M == sphere_M && sphere_ok && !options.M) {
        errors.push_back(sphere.max_error);
        clean = clean && sphere.result.status != ExitStatus::kBlowUp;
        continue;
      }
      const auto s = run_sphere(sphere_config(options, M), false);
      if (s.result.status == ExitStatus::kBlowUp) {
        clean = false;
        report.sphere_blew_up = true;
      }
      errors.push_back(s.max_error);
    }
    r.passed = clean;
    std::ostringstream m;
    m << "max errors";
    for (std::size_t i = 0; i < grids.size(); ++i) m << " M=" << grids[i] << ":" << fmt("%.3e", errors[i]);
    for (std::size_t i = 1; i < errors.size(); ++i) {
      const double order = std::log2(errors[i - 1] / errors[i]);
      r.passed = r.passed && order >= kOrderLimit;
      m << " log2(" << grids[i - 1] << "/" << grids[i] << ")=" << fmt("%.2f", order);
    }
    m << " (>= 1.8)";
    r.measured = m.str();
  });

  // 3 and 4 share the perturbed runs.
  const std::vector<CurvatureFunctionSpec> suite_specs{
      CurvatureFunctionSpec::sigma(1), CurvatureFunctionSpec::sigma(2), CurvatureFunctionSpec::sigma(3),
      CurvatureFunctionSpec::power_mean(0.5),
      CurvatureFunctionSpec::blend({{CurvatureFunctionSpec::sigma(1), 0.5},
                                    {CurvatureFunctionSpec::sigma(2), 0.5}})};
  std::vector<flow::RunResult> suite_runs;
  std::string suite_error;
  double suite_seconds = 0.0;
  {
    Stopwatch clock;
    try {
      for (const auto& f : suite_specs) suite_runs.push_back(flow::run(perturbed_config(options, f, suite_M)));
    } catch (const std::exception& e) {
      suite_error = std::string("error: ") + e.what();
    }
    suite_seconds = clock.seconds();
  }
  const bool suite_ok = suite_runs.size() == suite_specs.size();

  {
    auto r = criterion(3, "theorem property suite");
    if (!suite_ok) {
      r.measured = suite_error;
    } else {
      r.passed = suite_seconds <= kSuiteSeconds;
      std::ostringstream m;
      for (std::size_t i = 0; i < suite_runs.size(); ++i) {
        const auto& res = suite_runs[i];
        const auto& v = res.verdict;
        const bool ok = v && res.status != ExitStatus::kBlowUp && res.reached_stop_theta &&
                        v->minF_monotone && v->pinching_bound && v->G_positive && v->psc_preserved;
        r.passed = r.passed && ok;
        m << symfunc::to_string(suite_specs[i]) << ":" << (ok ? "ok" : "FAIL");
        if (v && !ok)
          m << "(" << flow::to_string(res.status) << ", minF " << verdict_word(v->minF_monotone) << ", pinch " << verdict_word(v->pinching_bound)
            << ", G " << verdict_word(v->G_positive) << ", psc " << verdict_word(v->psc_preserved) << ")";
        if (v) m << " max_ratio=" << fmt("%.3f", v->max_kappa_ratio) << "/" << fmt("%.2f", v->pinching_constant);
        m << "; ";
      }
      m << "M=" << suite_M << " total " << fmt("%.1f", suite_seconds) << " s (<= 60 s)";
      r.measured = m.str();
    }
    r.seconds = suite_seconds;
    report.criteria.push_back(r);
    if (progress) progress(r);
  }

  {
    auto r = criterion(4, "roundness and convergence");
    if (!suite_ok) {
      r.measured = suite_error;
    } else {
      r.passed = true;
      std::ostringstream m;
      for (std::size_t i = 0; i < suite_runs.size(); ++i) {
        const auto& v = suite_runs[i].verdict;
        const bool ok = v && v->osc_decay && v->roundness_decay;
        r.passed = r.passed && ok;
        m << symfunc::to_string(suite_specs[i]) << ":" << (ok ? "ok" : "FAIL");
        if (v)
          m << " osc " << fmt("%.4f", v->osc_final / v->osc_initial) << "x (<= 0.2) slope "
            << fmt("%.3f", v->osc_slope) << " (< 0) roundness "
            << fmt("%.4f", v->roundness_final / v->roundness_initial) << "x (<= 0.5)";
        m << "; ";
      }
      r.measured = m.str();
    }
    report.criteria.push_back(r);
    if (progress) progress(r);
  }

  guarded(criterion(5, "symmetric-function suite"), [&](CriterionResult& r) {
    Stopwatch clock;
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> logk(std::log(symfunc::kSamplerLow), std::log(symfunc::kSamplerHigh));
    double worst_gm = INFINITY, worst_ic = INFINITY, worst_ord = INFINITY, worst_eig = INFINITY, worst_euler = 0.0;
    int specs = 0;
    for (int n : {3, 4, 5}) {
      std::vector<double> kappa(n), z(n), grad(n);
      for (const auto& spec : symfunc::builtin_specs(n)) {
        ++specs;
        for (int s = 0; s < 10000; ++s) {
          for (int i = 0; i < n; ++i) {
            z[i] = logk(rng);
            kappa[i] = std::exp(z[i]);
          }
          const symfunc::PrincipalCurvatureVector k(kappa);
          const double F = symfunc::evaluate_with_gradient(spec, kappa, grad);
          worst_gm = std::min(worst_gm, symfunc::geometric_mean_gap(spec, k) / F);
          worst_ic = std::min(worst_ic, symfunc::inverse_concavity_margin(spec, k) / (F * F));
          for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
              worst_ord = std::min(worst_ord, symfunc::ordering_margin(spec, k, i, j));
          worst_eig = std::min(worst_eig, symfunc::log_hessian_min_eigenvalue(spec, z));
          double euler = 0.0;
          for (int i = 0; i < n; ++i) euler += grad[i] * kappa[i];
          worst_euler = std::max(worst_euler, std::abs(euler - F) / F);
        }
      }
    }
    const double seconds = clock.seconds();
    r.passed = worst_gm >= -1e-12 && worst_ic >= -1e-12 && worst_ord >= -1e-12 && worst_eig >= -1e-8 &&
               worst_euler <= 1e-10 && seconds <= kSymSeconds;
    r.measured = std::to_string(specs) + " specs x 1e4: min gap/F=" + fmt("%.3e", worst_gm) +
                 " min invconc/F^2=" + fmt("%.3e", worst_ic) + " min ordering=" + fmt("%.3e", worst_ord) +
                 " min logHess eig=" + fmt("%.3e", worst_eig) + " max Euler=" + fmt("%.2e", worst_euler) +
                 " time=" + fmt("%.1f", seconds) + " s (<= 30 s)";
  });

  guarded(criterion(6, "matrix second derivative"), [&](CriterionResult& r) {
    std::mt19937_64 rng(options.seed + 1);
    std::uniform_real_distribution<double> logk(std::log(0.5), std::log(5.0));
    std::uniform_real_distribution<double> entry(-1.0, 1.0);
    double worst = 0.0;
    int samples = 0;
    for (int n : {3, 4, 5}) {
      std::vector<double> kappa(n);
      for (const auto& spec : symfunc::builtin_specs(n)) {
        for (int tested = 0; tested < 100;) {
          for (auto& k : kappa) k = std::exp(logk(rng));
          std::sort(kappa.begin(), kappa.end());
          bool gapped = true;
          for (int i = 1; i < n; ++i) gapped = gapped && kappa[i] - kappa[i - 1] > 1e-3;
          if (!gapped) continue;
          Eigen::MatrixXd B(n, n);
          for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) B(i, j) = B(j, i) = entry(rng);
          const double exact = symfunc::matrix_second_derivative(spec, symfunc::PrincipalCurvatureVector(kappa), B);
          const double fd = matrix_fd(spec, kappa, B);
          const double F = symfunc::evaluate(spec, std::span<const double>(kappa));
          const double scale = std::max(std::abs(exact), 1e-2 * F / (kappa[0] * kappa[0]));
          worst = std::max(worst, std::abs(fd - exact) / scale);
          ++tested;
          ++samples;
        }
      }
    }
    r.passed = worst <= kMatrixTolerance;
    r.measured = std::to_string(samples) + " samples, max relative deviation " + fmt("%.3e", worst) + " (<= 1e-6)";
  });

  guarded(criterion(7, "oracle equivalence"), [&](CriterionResult& r) {
    double worst = 0.0;
    std::string where;
    for (const auto& p : oracle::test_profiles()) {
      const auto cc = oracle::cross_check(p, 3, oracle_M, 1e-4);
      if (cc.max_relative_discrepancy >= worst) {
        worst = cc.max_relative_discrepancy;
        where = p.name;
      }
    }
    r.passed = worst <= kOracleTolerance;
    r.measured = "M=" + std::to_string(oracle_M) + " max relative discrepancy " + fmt("%.3e", worst) + " (" +
                 where + ", <= 1e-6)";
  });

  guarded(criterion(8, "speed-evolution consistency"), [&](CriterionResult& r) {
    if (!sphere_ok) throw std::runtime_error(sphere_error);
    // Residual of the full evolution at t = 0.1, where the perturbation is still resolved.
    auto perturbed_residual = [&](int M) {
      FlowConfig c = perturbed_config(options, CurvatureFunctionSpec::sigma(2), M);
      c.stop_time = 0.1;
      std::vector<FlowState> window;
      flow::run(c, [&](const FlowState& s) {
        window.push_back(s);
        if (window.size() > 3) window.erase(window.begin());
      });
      if (window.size() < 3) throw ContractError("perturbed run took fewer than two steps");
      return flow::speed_residual(window[0], window[1], window[2]).relative();
    };
    const double coarse = perturbed_residual(64), fine = perturbed_residual(128);
    const double ratio = coarse / fine;
    r.passed = sphere.residual_windows > 0 && sphere.worst_residual_per_dt <= kResidualPerDt &&
               ratio >= kResidualRatio;
    r.measured = "sphere max (residual/rhs)/dt=" + fmt("%.3e", sphere.worst_residual_per_dt) + " over " +
                 std::to_string(sphere.residual_windows) + " windows (<= 2); perturbed residual M=64:" +
                 fmt("%.3e", coarse) + " M=128:" + fmt("%.3e", fine) + " ratio " + fmt("%.2f", ratio) +
                 " (>= 2.8)";
  });

  guarded(criterion(9, "Tso bound"), [&](CriterionResult& r) {
    if (!sphere_ok) throw std::runtime_error(sphere_error);
    const auto& records = sphere.result.records;
    if (records.empty()) throw ContractError("sphere run produced no records");
    const double bound_a = 2.0 * std::cosh(2.0 * records.front().max_u) * std::pow(0.5 * std::sinh(kTsoRho), -2);
    const double bound = std::max(records.front().phi_max, bound_a);
    double worst = 0.0;
    int checked = 0;
    bool finite = true;
    for (const auto& rec : records) {
      if (rec.min_u < kTsoRho) break;
      finite = finite && std::isfinite(rec.phi_max);
      worst = std::max(worst, rec.phi_max);
      ++checked;
    }
    r.passed = finite && checked > 0 && worst <= bound;
    r.measured = "max phi=" + fmt("%.6f", worst) + " over " + std::to_string(checked) +
                 " records with min u >= 0.25, bound " + fmt("%.6f", bound);
  });

  guarded(criterion(10, "hypothesis gates"), [&](CriterionResult& r) {
    const fs::path dir = fs::temp_directory_path() /
                         ("hypflow-acceptance-" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    struct Cleanup {
      fs::path p;
      ~Cleanup() {
        std::error_code ec;
        fs::remove_all(p, ec);
      }
    } cleanup{dir};

    auto simulate = [&](const std::string& name, const std::string& ini) {
      const fs::path file = dir / (name + ".ini");
      std::ofstream(file) << ini;
      app::SimulateOptions so;
      so.config_path = file;
      so.out_dir = dir / name;
      std::ostringstream out, err;
      return app::simulate(so, out, err);
    };
    const int wide = simulate("wide", "[flow]\nM = 64\n[scenario]\nname = perturbed_sphere\nradius = 3\n"
                                      "amplitude = 0.3\nmode = 2\n");
    const int strong = simulate("strong", "[flow]\nM = 64\n[scenario]\nname = perturbed_sphere\nradius = 1\n"
                                          "amplitude = 0.9\nmode = 2\n");
    const int planar = simulate("planar", "[flow]\nn = 2\nM = 64\n[scenario]\nname = sphere\nradius = 1\n");
    bool flagged = false, executed = false;
    if (std::ifstream in{dir / "planar" / "verdict.json"}) {
      const auto j = nlohmann::json::parse(in);
      flagged = j.at("theorem_conformant") == false;
      executed = j.at("steps").get<std::int64_t>() > 0;
    }
    r.passed = wide == app::kExitConfig && strong == app::kExitConfig && flagged && executed;
    r.measured = "radius 3 amp 0.3 -> exit " + std::to_string(wide) + ", radius 1 amp 0.9 -> exit " +
                 std::to_string(strong) + " (both 4); n=2 sphere exit " + std::to_string(planar) +
                 (executed ? " executed" : " NOT executed") +
                 (flagged ? ", theorem_conformant=false" : ", NOT flagged");
  });

  return report;
}

}  // namespace hypflow::acceptance
