#pragma once

// Scalar time series of the quantities the convergence theorem constrains, and the
// pass/fail reduction of a finished trajectory.

#include <iosfwd>
#include <span>
#include <string>

#include "hypflow/geometry.hpp"

namespace hypflow::monitors {

/// One time slice. tau, theta and osc_u_tilde depend on the comparison sphere, which
/// is only known once the run is over; they are NaN until filled in. phi_max is NaN
/// when the Tso denominator is not positive.
struct MonitorRecord {
  double t = 0.0;
  double tau = 0.0;
  double theta = 0.0;
  double min_f = 0.0;
  double max_f = 0.0;
  double kappa_ratio = 1.0;
  double eps0 = 0.0;
  double eps_used = 0.0;
  double g_margin = 0.0;
  double psc_margin = 0.0;
  double osc_u_tilde = 0.0;
  double roundness_ratio = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
  double chi_min = 0.0;
  double phi_max = 0.0;
};

/// Record for the current cache. rho is the inscribed radius used for phi.
MonitorRecord observe(const geometry::GeometryCache& cache, double t, double eps0,
                      double eps_used, double rho);

/// min over the grid of (product of the two smallest principal values - 1) / F^2.
/// Throws HypothesisError if that minimum is not positive.
double epsilon0(const geometry::GeometryCache& initial);

/// eps^(-n/2). Throws ContractError unless eps in (0, 1].
double pinching_bound(double eps_used, int n);

struct Tolerances {
  double monotone_relative = 1e-6;  // allowed drop of min F per record, relative
  double g_floor = -1e-8;
  double decay_factor = 0.2;        // osc_final <= decay_factor * osc_initial
  double osc_floor = 1e-10;         // osc below this counts as already round
  double roundness_factor = 0.5;
  double roundness_floor = 1e-10;
};

struct TrajectoryVerdict {
  bool minF_monotone = false;
  bool pinching_bound = false;
  bool G_positive = false;
  bool psc_preserved = false;
  bool osc_decay = false;
  bool roundness_decay = false;  // reported, not part of passed()

  double worst_minF_drop = 0.0;  // largest relative drop between consecutive records
  double t_worst_minF_drop = 0.0;
  double pinching_constant = 0.0;
  double max_kappa_ratio = 0.0;
  double t_max_kappa_ratio = 0.0;
  double min_g_margin = 0.0;
  double t_min_g_margin = 0.0;
  double min_psc_margin = 0.0;
  double t_min_psc_margin = 0.0;
  double osc_initial = 0.0;
  double osc_final = 0.0;
  double osc_slope = 0.0;  // least-squares slope of log osc against tau
  double roundness_initial = 0.0;
  double roundness_final = 0.0;

  bool passed() const noexcept {
    return minF_monotone && pinching_bound && G_positive && psc_preserved && osc_decay;
  }
};

/// Pure function of the record sequence. Records whose osc or tau is not finite are
/// skipped for the osc criteria. Throws ContractError with fewer than 2 records.
TrajectoryVerdict verdict(std::span<const MonitorRecord> records, int n,
                          const Tolerances& tolerances = {});

/// Fixed column order.
const std::string& csv_header();
void write_csv_row(std::ostream& out, const MonitorRecord& record);
void write_csv(std::ostream& out, std::span<const MonitorRecord> records);

}  // namespace hypflow::monitors
