#pragma once

// Symmetric curvature speeds F(kappa) on the positive cone and the structural
// inequalities they are required to satisfy: monotonicity, degree-one
// homogeneity, normalization F(1,...,1) = 1, and log-convexity of
// z -> log F(e^z).

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace hypflow::symfunc {

/// Hot-path kernels use fixed-capacity buffers; dimensions above this are rejected.
inline constexpr int kMaxDimension = 16;

/// (mean of kappa_i^r)^(1/r).
struct PowerMean {
  double exponent;
};

/// E_k^(1/k) with E_k the normalized k-th elementary symmetric polynomial.
struct ElementarySymRoot {
  int order;
};

struct BlendTerm;

/// prod_a F_a^(theta_a) with positive weights summing to one.
struct GeometricBlend {
  std::vector<BlendTerm> terms;
};

class CurvatureFunctionSpec {
 public:
  using Kind = std::variant<PowerMean, ElementarySymRoot, GeometricBlend>;

  /// Throws ConfigError unless r > 0.
  static CurvatureFunctionSpec power_mean(double r);
  /// Throws ConfigError unless k >= 1; the upper bound k <= n is checked by validate_for.
  static CurvatureFunctionSpec sigma(int k);
  /// Throws ConfigError on empty terms, nonpositive weights, or |sum - 1| > 1e-12.
  static CurvatureFunctionSpec blend(std::vector<BlendTerm> terms);
  /// Power mean with any nonzero exponent. Negative exponents leave the admissible
  /// class and exist only to build counterexamples for the assumption sampler.
  static CurvatureFunctionSpec unchecked_power_mean(double r);

  const Kind& kind() const noexcept { return kind_; }

  /// Throws ConfigError if the spec is not defined in dimension n.
  void validate_for(int n) const;

  /// Static classification, not a numerical test. E_k^(1/k) for k >= 2 and power
  /// means with 0 < r < 1 are strictly concave; a blend is strictly concave when all
  /// members are concave and at least one is strictly concave.
  bool strictly_concave() const;
  bool concave() const;
  /// F = H/n, written either as sigma(k=1) or powermean(r=1).
  bool is_normalized_mean_curvature() const;

  friend bool operator==(const CurvatureFunctionSpec&, const CurvatureFunctionSpec&);

 private:
  explicit CurvatureFunctionSpec(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

struct BlendTerm {
  CurvatureFunctionSpec spec;
  double weight;
  friend bool operator==(const BlendTerm&, const BlendTerm&) = default;
};

/// Principal curvatures in Gamma_+. Values are kept both in caller order and sorted
/// ascending; sorted()[i] == original()[permutation()[i]].
class PrincipalCurvatureVector {
 public:
  /// Throws DomainError on nonpositive or non-finite entries, or an empty/oversized vector.
  explicit PrincipalCurvatureVector(std::span<const double> values);
  PrincipalCurvatureVector(std::initializer_list<double> values);

  int size() const noexcept { return static_cast<int>(original_.size()); }
  std::span<const double> original() const noexcept { return original_; }
  std::span<const double> sorted() const noexcept { return sorted_; }
  const std::vector<int>& permutation() const noexcept { return permutation_; }
  double min() const noexcept { return sorted_.front(); }
  double max() const noexcept { return sorted_.back(); }

 private:
  std::vector<double> original_;
  std::vector<double> sorted_;
  std::vector<int> permutation_;
};

/// F, its gradient and Hessian in kappa, indexed in the caller's original order.
struct DerivativeBundle {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

double evaluate(const CurvatureFunctionSpec& spec, const PrincipalCurvatureVector& kappa);
DerivativeBundle derivatives(const CurvatureFunctionSpec& spec,
                             const PrincipalCurvatureVector& kappa);

/// Allocation-free F and gradient for inner loops. kappa entries must be positive
/// (DomainError otherwise); gradient must have kappa.size() entries.
double evaluate_with_gradient(const CurvatureFunctionSpec& spec, std::span<const double> kappa,
                              std::span<double> gradient);
double evaluate(const CurvatureFunctionSpec& spec, std::span<const double> kappa);

/// Second derivative of the matrix extension F(A) at A = diag(kappa) in the symmetric
/// direction B (B indexed like kappa.original()). Divided differences of the gradient
/// are replaced by their coincidence limit when |kappa_i - kappa_j| < 1e-8 max kappa.
/// Throws ContractError if B is not square of the right size or not symmetric.
double matrix_second_derivative(const CurvatureFunctionSpec& spec,
                                const PrincipalCurvatureVector& kappa, const Eigen::MatrixXd& B);

/// F_*(mu) = 1 / F(1/mu_1, ..., 1/mu_n).
double dual_value(const CurvatureFunctionSpec& spec, const PrincipalCurvatureVector& mu);

/// F(kappa) - (prod kappa_i)^(1/n); nonnegative for admissible speeds.
double geometric_mean_gap(const CurvatureFunctionSpec& spec, const PrincipalCurvatureVector& kappa);

/// sum_i dF/dkappa_i kappa_i^2 - F^2; nonnegative for inverse-concave speeds.
double inverse_concavity_margin(const CurvatureFunctionSpec& spec,
                                const PrincipalCurvatureVector& kappa);

/// (Fdot^i kappa_i - Fdot^j kappa_j)(kappa_i - kappa_j), zero-based indices into the
/// original order. Throws ContractError if i == j or an index is out of range.
double ordering_margin(const CurvatureFunctionSpec& spec, const PrincipalCurvatureVector& kappa,
                       int i, int j);

/// Margin of the quadratic-form condition
///   sum Fddot^{kl} y_k y_l - F^{-1} (sum Fdot^k y_k)^2 + sum Fdot^k y_k^2 / kappa_k.
double quadform_margin(const CurvatureFunctionSpec& spec, const PrincipalCurvatureVector& kappa,
                       std::span<const double> y);

/// Hessian of Phi(z) = log F(e^z), assembled from the kappa-derivatives at kappa = e^z.
Eigen::MatrixXd log_hessian(const CurvatureFunctionSpec& spec, std::span<const double> z);
double log_hessian_min_eigenvalue(const CurvatureFunctionSpec& spec, std::span<const double> z);

struct AssumptionReport {
  bool monotone_ok = false;
  bool homogeneous_ok = false;
  bool normalized_ok = false;
  bool quadform_ok = false;
  bool logconvex_ok = false;

  /// Minimum sampled quadratic-form margin and the (kappa, y) where it occurred.
  double worst_margin = 0.0;
  std::vector<double> worst_kappa;
  std::vector<double> worst_y;

  double min_gradient = 0.0;
  double worst_homogeneity_residual = 0.0;  // relative
  double worst_euler_residual = 0.0;        // relative
  double normalization_residual = 0.0;
  double min_log_hessian_eigenvalue = 0.0;

  int dimension = 0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;

  bool all_ok() const noexcept {
    return monotone_ok && homogeneous_ok && normalized_ok && quadform_ok && logconvex_ok;
  }
};

/// Sampling-based certification of the admissibility conditions. kappa is drawn
/// log-uniform in [0.05, 20]^n and y uniform in [-1, 1]^n from a seeded generator.
/// A non-admissible spec yields false flags, not an exception.
/// Throws ConfigError if sample_count < 1 or the spec is undefined in dimension n.
AssumptionReport check_assumption(const CurvatureFunctionSpec& spec, int n,
                                  std::int64_t sample_count, std::uint64_t seed);

/// The speeds exercised by the test and acceptance suites in dimension n: sigma(1..n),
/// power means r in {0.5, 1, 2, 3.5}, and two geometric blends.
std::vector<CurvatureFunctionSpec> builtin_specs(int n);

inline constexpr double kSamplerLow = 0.05;
inline constexpr double kSamplerHigh = 20.0;
inline constexpr double kAssumptionTolerance = 1e-8;

}  // namespace hypflow::symfunc
