#pragma once

// Command implementations behind the hypflow executable. Each returns the process exit
// code: 0 success, 2 invariant violation or failed check, 3 numeric blow-up,
// 4 configuration or hypothesis error.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hypflow/acceptance.hpp"
#include "hypflow/config.hpp"

namespace hypflow::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 2;
inline constexpr int kExitBlowUp = 3;
inline constexpr int kExitConfig = 4;

/// $HYPFLOW_OUTPUT_ROOT, or ./hypflow-out when unset.
std::filesystem::path default_output_root();

struct SimulateOptions {
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  bool emit_plot_data = false;
};

int simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err);

/// Runs an already parsed config into out_dir.
int simulate_config(const config::ScenarioConfig& config, const std::filesystem::path& out_dir,
                    std::ostream& out, std::ostream& err);

int verify_assumption(const std::string& spec_text, int n, std::int64_t samples,
                      std::uint64_t seed, std::ostream& out, std::ostream& err);

int oracle_check(const std::string& profile, int M, double h_step, int n, bool inject_sign_fault,
                 std::ostream& out, std::ostream& err);

int suite(const acceptance::Options& options, std::ostream& out, std::ostream& err);

struct SweepOptions {
  std::vector<std::filesystem::path> configs;
  std::vector<std::string> f_specs;  // optional: each config is run once per spec
  std::optional<std::filesystem::path> out_root;
  std::optional<std::uint64_t> seed;
  int jobs = 0;  // 0: hardware concurrency
};

/// Exit code is the most severe of the member runs.
int sweep(const SweepOptions& options, std::ostream& out, std::ostream& err);

/// Full command line, including argv[0].
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hypflow::app
