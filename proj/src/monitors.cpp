#include "hypflow/monitors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "hypflow/errors.hpp"

namespace hypflow::monitors {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

MonitorRecord observe(const geometry::GeometryCache& cache, double t, double eps0,
                      double eps_used, double rho) {
  MonitorRecord r;
  r.t = t;
  r.tau = r.theta = r.osc_u_tilde = kNaN;
  r.eps0 = eps0;
  r.eps_used = eps_used;
  r.min_f = *std::min_element(cache.f.begin(), cache.f.end());
  r.max_f = *std::max_element(cache.f.begin(), cache.f.end());
  r.min_u = *std::min_element(cache.u.begin(), cache.u.end());
  r.max_u = *std::max_element(cache.u.begin(), cache.u.end());
  r.chi_min = *std::min_element(cache.chi.begin(), cache.chi.end());
  r.g_margin = geometry::sectional_margin(cache, eps_used);
  r.psc_margin = geometry::sectional_margin(cache, 0.0);

  const double shift = 0.5 * std::sinh(rho);
  const bool phi_valid = r.chi_min > shift;
  r.kappa_ratio = 1.0;
  r.roundness_ratio = -std::numeric_limits<double>::infinity();
  r.phi_max = phi_valid ? -std::numeric_limits<double>::infinity() : kNaN;
  for (int m = 0; m < cache.size(); ++m) {
    const double a = cache.kappa_mer[m], b = cache.kappa_rot[m];
    r.kappa_ratio = std::max(r.kappa_ratio, std::max(a, b) / std::min(a, b));
    const double f2 = cache.f[m] * cache.f[m];
    r.roundness_ratio = std::max(r.roundness_ratio, (cache.norm_a2[m] - cache.n * f2) / f2);
    if (phi_valid) r.phi_max = std::max(r.phi_max, cache.f[m] / (cache.chi[m] - shift));
  }
  return r;
}

double epsilon0(const geometry::GeometryCache& initial) {
  double eps = std::numeric_limits<double>::infinity();
  for (int m = 0; m < initial.size(); ++m)
    eps = std::min(eps, (geometry::pair_product(initial, m) - 1.0) / (initial.f[m] * initial.f[m]));
  if (!(eps > 0.0))
    throw HypothesisError(
        "initial data violates the positive sectional curvature hypothesis "
        "(min (kappa_a kappa_b - 1)/F^2 = " +
        std::to_string(eps) + " <= 0)");
  return eps;
}

double pinching_bound(double eps_used, int n) {
  if (!(eps_used > 0.0 && eps_used <= 1.0))
    throw ContractError("pinching_bound: eps must be in (0, 1], got " + std::to_string(eps_used));
  return std::pow(eps_used, -0.5 * n);
}

TrajectoryVerdict verdict(std::span<const MonitorRecord> records, int n, const Tolerances& tol) {
  if (records.size() < 2) throw ContractError("verdict needs at least 2 records");
  TrajectoryVerdict v;
  v.minF_monotone = v.pinching_bound = v.G_positive = v.psc_preserved = true;
  v.pinching_constant = pinching_bound(records.front().eps_used, n);
  v.min_g_margin = v.min_psc_margin = std::numeric_limits<double>::infinity();

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (i > 0) {
      const auto& prev = records[i - 1];
      const double drop = (prev.min_f - r.min_f) / prev.min_f;
      if (drop > v.worst_minF_drop) {
        v.worst_minF_drop = drop;
        v.t_worst_minF_drop = r.t;
      }
    }
    if (r.kappa_ratio > v.max_kappa_ratio) {
      v.max_kappa_ratio = r.kappa_ratio;
      v.t_max_kappa_ratio = r.t;
    }
    if (r.g_margin < v.min_g_margin) {
      v.min_g_margin = r.g_margin;
      v.t_min_g_margin = r.t;
    }
    if (r.psc_margin < v.min_psc_margin) {
      v.min_psc_margin = r.psc_margin;
      v.t_min_psc_margin = r.t;
    }
  }
  v.minF_monotone = v.worst_minF_drop <= tol.monotone_relative;
  v.pinching_bound = v.max_kappa_ratio <= v.pinching_constant;
  v.G_positive = v.min_g_margin > tol.g_floor;
  v.psc_preserved = v.min_psc_margin > 0.0;

  // osc criteria over the records where the comparison sphere is defined.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  bool have_first = false;
  for (const auto& r : records) {
    if (!std::isfinite(r.osc_u_tilde) || !std::isfinite(r.tau)) continue;
    if (!have_first) {
      v.osc_initial = r.osc_u_tilde;
      have_first = true;
    }
    v.osc_final = r.osc_u_tilde;
    if (r.osc_u_tilde > 0.0) {
      const double y = std::log(r.osc_u_tilde);
      sx += r.tau, sy += y, sxx += r.tau * r.tau, sxy += r.tau * y;
      ++count;
    }
  }
  const double denom = count * sxx - sx * sx;
  v.osc_slope = count >= 2 && denom > 0 ? (count * sxy - sx * sy) / denom : 0.0;
  if (!have_first) {
    v.osc_decay = false;
  } else if (v.osc_initial <= tol.osc_floor) {
    v.osc_decay = true;
  } else {
    v.osc_decay = v.osc_final <= tol.decay_factor * v.osc_initial && v.osc_slope < 0.0;
  }

  v.roundness_initial = records.front().roundness_ratio;
  v.roundness_final = records.back().roundness_ratio;
  v.roundness_decay = std::abs(v.roundness_initial) <= tol.roundness_floor
                          ? std::abs(v.roundness_final) <= tol.roundness_floor
                          : std::abs(v.roundness_final) <= tol.roundness_factor *
                                                               std::abs(v.roundness_initial);
  return v;
}

const std::string& csv_header() {
  static const std::string header =
      "t,tau,theta,min_f,max_f,kappa_ratio,eps0,eps_used,g_margin,psc_margin,osc_u_tilde,"
      "roundness_ratio,min_u,max_u,chi_min,phi_max";
  return header;
}

namespace {

void put(std::ostream& out, double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  out.write(buf, res.ptr - buf);
}

}  // namespace

void write_csv_row(std::ostream& out, const MonitorRecord& r) {
  const double fields[] = {r.t,        r.tau,        r.theta,          r.min_f,
                           r.max_f,    r.kappa_ratio, r.eps0,          r.eps_used,
                           r.g_margin, r.psc_margin, r.osc_u_tilde,    r.roundness_ratio,
                           r.min_u,    r.max_u,      r.chi_min,        r.phi_max};
  bool first = true;
  for (double x : fields) {
    if (!first) out << ',';
    first = false;
    put(out, x);
  }
  out << '\n';
}

void write_csv(std::ostream& out, std::span<const MonitorRecord> records) {
  out << csv_header() << '\n';
  for (const auto& r : records) write_csv_row(out, r);
}

}  // namespace hypflow::monitors
