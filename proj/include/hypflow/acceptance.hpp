#pragma once

// The acceptance battery: ten criteria, each reduced to pass/fail plus the measured
// values and the tolerance they were held to.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hypflow::acceptance {

struct Options {
  std::optional<double> cfl;  // overrides cfl_safety of the flow runs in 1-3 and 8 (fault injection)
  std::optional<int> M;       // overrides the grid of the sphere, Theorem-suite and oracle runs
  std::uint64_t seed = 1;     // symmetric-function samplers
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string measured;
  double seconds = 0.0;
};

struct Report {
  std::vector<CriterionResult> criteria;
  bool sphere_blew_up = false;

  bool passed() const noexcept;
};

using Progress = std::function<void(const CriterionResult&)>;

/// Runs criteria 1..10 in order; progress is called after each one.
Report run(const Options& options, const Progress& progress = {});

/// One line: "criterion 3 PASS  theorem suite  <measured>".
std::string format_line(const CriterionResult& result);

}  // namespace hypflow::acceptance
