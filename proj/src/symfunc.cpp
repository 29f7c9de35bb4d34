#include "hypflow/symfunc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "hypflow/errors.hpp"

namespace hypflow::symfunc {

namespace {

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDimension, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDimension, kMaxDimension>;

enum class Order { kValue, kGradient, kHessian };

constexpr double kCoincidenceThreshold = 1e-8;

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// sigma_0..sigma_k of kappa as the coefficients of prod (1 + kappa_l x), skipping
// up to two indices. Only additions of positive terms, so no cancellation.
Vec elementary_coefficients(const Vec& kappa, int k, Eigen::Index skip_a = -1,
                            Eigen::Index skip_b = -1) {
  Vec e = Vec::Zero(k + 1);
  e(0) = 1.0;
  int used = 0;
  for (Eigen::Index i = 0; i < kappa.size(); ++i) {
    if (i == skip_a || i == skip_b) continue;
    ++used;
    for (int j = std::min(used, k); j >= 1; --j) e(j) += kappa(i) * e(j - 1);
  }
  return e;
}

double eval_power_mean(const PowerMean& pm, const Vec& kappa, Order order, Vec* grad, Mat* hess) {
  const double r = pm.exponent;
  const Eigen::Index n = kappa.size();
  // Reference scale keeps every (kappa_i / ref)^r <= 1.
  const double ref = r > 0 ? kappa.maxCoeff() : kappa.minCoeff();
  Vec t(n);
  for (Eigen::Index i = 0; i < n; ++i) t(i) = std::pow(kappa(i) / ref, r);
  const double total = t.sum();
  const double value = ref * std::pow(total / static_cast<double>(n), 1.0 / r);
  if (order == Order::kValue) return value;
  const Vec w = t / total;
  *grad = value * w.cwiseQuotient(kappa);
  if (order == Order::kHessian) {
    hess->resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        (*hess)(i, j) = value * (r - 1.0) * ((i == j ? w(i) : 0.0) - w(i) * w(j)) /
                        (kappa(i) * kappa(j));
  }
  return value;
}

double eval_sym_root(const ElementarySymRoot& es, const Vec& kappa, Order order, Vec* grad,
                     Mat* hess) {
  const int k = es.order;
  const int n = static_cast<int>(kappa.size());
  const double norm = binomial(n, k);
  const Vec e = elementary_coefficients(kappa, k);
  const double ek = e(k) / norm;
  const double value = k == 1 ? ek : k == 2 ? std::sqrt(ek) : std::pow(ek, 1.0 / k);
  if (order == Order::kValue) return value;

  // dE_k/dkappa_i = sigma_{k-1}(kappa | i) / C(n, k), from the coefficients of the
  // products over l < i and l > i.
  std::array<std::array<double, kMaxDimension + 1>, kMaxDimension + 1> pre, suf;
  std::fill_n(pre[0].begin(), k, 0.0);
  std::fill_n(suf[n].begin(), k, 0.0);
  pre[0][0] = suf[n][0] = 1.0;
  for (int i = 0; i < n; ++i) {
    pre[i + 1][0] = 1.0;
    for (int j = 1; j < k; ++j) pre[i + 1][j] = pre[i][j] + kappa(i) * pre[i][j - 1];
  }
  for (int i = n - 1; i >= 0; --i) {
    suf[i][0] = 1.0;
    for (int j = 1; j < k; ++j) suf[i][j] = suf[i + 1][j] + kappa(i) * suf[i + 1][j - 1];
  }
  Vec de(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j <= k - 1; ++j) s += pre[i][j] * suf[i + 1][k - 1 - j];
    de(i) = s / norm;
  }
  const double outer = value / (k * ek);
  *grad = outer * de;
  if (order == Order::kHessian) {
    hess->resize(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double dde = 0.0;
        if (i != j && k >= 2) dde = elementary_coefficients(kappa, k - 2, i, j)(k - 2) / norm;
        (*hess)(i, j) = outer * (dde + (1.0 / k - 1.0) * de(i) * de(j) / ek);
      }
    }
  }
  return value;
}

double eval_impl(const CurvatureFunctionSpec& spec, const Vec& kappa, Order order, Vec* grad,
                 Mat* hess);

double eval_blend(const GeometricBlend& bl, const Vec& kappa, Order order, Vec* grad, Mat* hess) {
  const Eigen::Index n = kappa.size();
  double log_value = 0.0;
  Vec q = Vec::Zero(n);
  Mat curvature = Mat::Zero(n, n);
  Vec g;
  Mat h;
  for (const BlendTerm& term : bl.terms) {
    const double fa = eval_impl(term.spec, kappa, order, &g, &h);
    log_value += term.weight * std::log(fa);
    if (order == Order::kValue) continue;
    q += term.weight * g / fa;
    if (order == Order::kHessian) curvature += term.weight * (h / fa - g * g.transpose() / (fa * fa));
  }
  const double value = std::exp(log_value);
  if (order == Order::kValue) return value;
  *grad = value * q;
  if (order == Order::kHessian) *hess = value * (q * q.transpose() + curvature);
  return value;
}

double eval_impl(const CurvatureFunctionSpec& spec, const Vec& kappa, Order order, Vec* grad,
                 Mat* hess) {
  return std::visit(
      [&](const auto& kind) -> double {
        using T = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<T, PowerMean>) {
          return eval_power_mean(kind, kappa, order, grad, hess);
        } else if constexpr (std::is_same_v<T, ElementarySymRoot>) {
          return eval_sym_root(kind, kappa, order, grad, hess);
        } else {
          return eval_blend(kind, kappa, order, grad, hess);
        }
      },
      spec.kind());
}

Vec to_vec(std::span<const double> values) {
  if (values.empty() || values.size() > static_cast<std::size_t>(kMaxDimension))
    throw DomainError("curvature vector size must be in [1, " + std::to_string(kMaxDimension) + "]");
  Vec v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      std::ostringstream msg;
      msg << "principal curvature " << values[i] << " at index " << i
          << " is outside the positive cone";
      throw DomainError(msg.str());
    }
    v(static_cast<Eigen::Index>(i)) = values[i];
  }
  return v;
}

// Every kind is degree-one homogeneous, so evaluate on kappa / max kappa and rescale.
double eval_scaled(const CurvatureFunctionSpec& spec, const Vec& kappa, Order order, Vec* grad,
                   Mat* hess) {
  const double scale = kappa.maxCoeff();
  const Vec unit = kappa / scale;
  const double value = eval_impl(spec, unit, order, grad, hess) * scale;
  if (order == Order::kHessian) *hess /= scale;
  return value;
}

DerivativeBundle bundle_of(const CurvatureFunctionSpec& spec, const Vec& kappa) {
  Vec g;
  Mat h;
  DerivativeBundle out;
  out.value = eval_scaled(spec, kappa, Order::kHessian, &g, &h);
  out.gradient = g;
  out.hessian = 0.5 * (h + h.transpose());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// CurvatureFunctionSpec

CurvatureFunctionSpec CurvatureFunctionSpec::power_mean(double r) {
  if (!(r > 0.0) || !std::isfinite(r))
    throw ConfigError("powermean exponent must be a finite r > 0, got " + std::to_string(r));
  return CurvatureFunctionSpec(PowerMean{r});
}

CurvatureFunctionSpec CurvatureFunctionSpec::unchecked_power_mean(double r) {
  if (r == 0.0 || !std::isfinite(r)) throw ConfigError("power mean exponent must be nonzero");
  return CurvatureFunctionSpec(PowerMean{r});
}

CurvatureFunctionSpec CurvatureFunctionSpec::sigma(int k) {
  if (k < 1) throw ConfigError("sigma order must be k >= 1, got " + std::to_string(k));
  return CurvatureFunctionSpec(ElementarySymRoot{k});
}

CurvatureFunctionSpec CurvatureFunctionSpec::blend(std::vector<BlendTerm> terms) {
  if (terms.empty()) throw ConfigError("blend needs at least one term");
  double total = 0.0;
  for (const auto& t : terms) {
    if (!(t.weight > 0.0) || !std::isfinite(t.weight))
      throw ConfigError("blend weights must be positive, got " + std::to_string(t.weight));
    total += t.weight;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ConfigError("blend weights must sum to 1, got " + std::to_string(total));
  return CurvatureFunctionSpec(GeometricBlend{std::move(terms)});
}

void CurvatureFunctionSpec::validate_for(int n) const {
  if (n < 1 || n > kMaxDimension)
    throw ConfigError("dimension n must be in [1, " + std::to_string(kMaxDimension) + "]");
  std::visit(
      [n](const auto& kind) {
        using T = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<T, ElementarySymRoot>) {
          if (kind.order > n)
            throw ConfigError("sigma(k=" + std::to_string(kind.order) +
                              ") is undefined for n = " + std::to_string(n));
        } else if constexpr (std::is_same_v<T, GeometricBlend>) {
          for (const auto& t : kind.terms) t.spec.validate_for(n);
        }
      },
      kind_);
}

bool CurvatureFunctionSpec::concave() const {
  return std::visit(
      [](const auto& kind) -> bool {
        using T = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<T, PowerMean>) {
          return kind.exponent <= 1.0;
        } else if constexpr (std::is_same_v<T, ElementarySymRoot>) {
          return true;
        } else {
          return std::all_of(kind.terms.begin(), kind.terms.end(),
                             [](const BlendTerm& t) { return t.spec.concave(); });
        }
      },
      kind_);
}

bool CurvatureFunctionSpec::strictly_concave() const {
  return std::visit(
      [this](const auto& kind) -> bool {
        using T = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<T, PowerMean>) {
          return kind.exponent > 0.0 && kind.exponent < 1.0;
        } else if constexpr (std::is_same_v<T, ElementarySymRoot>) {
          return kind.order >= 2;
        } else {
          return concave() && std::any_of(kind.terms.begin(), kind.terms.end(),
                                          [](const BlendTerm& t) { return t.spec.strictly_concave(); });
        }
      },
      kind_);
}

bool CurvatureFunctionSpec::is_normalized_mean_curvature() const {
  if (const auto* pm = std::get_if<PowerMean>(&kind_)) return pm->exponent == 1.0;
  if (const auto* es = std::get_if<ElementarySymRoot>(&kind_)) return es->order == 1;
  return false;
}

bool operator==(const CurvatureFunctionSpec& a, const CurvatureFunctionSpec& b) {
  if (a.kind_.index() != b.kind_.index()) return false;
  if (const auto* pa = std::get_if<PowerMean>(&a.kind_))
    return pa->exponent == std::get<PowerMean>(b.kind_).exponent;
  if (const auto* ea = std::get_if<ElementarySymRoot>(&a.kind_))
    return ea->order == std::get<ElementarySymRoot>(b.kind_).order;
  return std::get<GeometricBlend>(a.kind_).terms == std::get<GeometricBlend>(b.kind_).terms;
}

// ---------------------------------------------------------------------------
// PrincipalCurvatureVector

PrincipalCurvatureVector::PrincipalCurvatureVector(std::span<const double> values)
    : original_(values.begin(), values.end()) {
  (void)to_vec(values);
  permutation_.resize(original_.size());
  std::iota(permutation_.begin(), permutation_.end(), 0);
  std::stable_sort(permutation_.begin(), permutation_.end(),
                   [this](int a, int b) { return original_[a] < original_[b]; });
  sorted_.reserve(original_.size());
  for (int idx : permutation_) sorted_.push_back(original_[static_cast<std::size_t>(idx)]);
}

PrincipalCurvatureVector::PrincipalCurvatureVector(std::initializer_list<double> values)
    : PrincipalCurvatureVector(std::span<const double>(values.begin(), values.size())) {}

// ---------------------------------------------------------------------------
// Evaluation

double evaluate(const CurvatureFunctionSpec& spec, const PrincipalCurvatureVector& kappa) {
  return evaluate(spec, kappa.original());
}

double evaluate(const CurvatureFunctionSpec& spec, std::span<const double> kappa) {
  return eval_scaled(spec, to_vec(kappa), Order::kValue, nullptr, nullptr);
}

double evaluate_with_gradient(const CurvatureFunctionSpec& spec, std::span<const double> kappa,
                              std::span<double> gradient) {
  if (gradient.size() != kappa.size()) throw ContractError("gradient buffer size mismatch");
  Vec g;
  const double value = eval_scaled(spec, to_vec(kappa), Order::kGradient, &g, nullptr);
  for (std::size_t i = 0; i < gradient.size(); ++i) gradient[i] = g(static_cast<Eigen::Index>(i));
  return value;
}

DerivativeBundle derivatives(const CurvatureFunctionSpec& spec,
                             const PrincipalCurvatureVector& kappa) {
  return bundle_of(spec, to_vec(kappa.original()));
}

double matrix_second_derivative(const CurvatureFunctionSpec& spec,
                                const PrincipalCurvatureVector& kappa, const Eigen::MatrixXd& B) {
  const int n = kappa.size();
  if (B.rows() != n || B.cols() != n)
    throw ContractError("direction matrix must be " + std::to_string(n) + "x" + std::to_string(n));
  const double bscale = std::max(1.0, B.cwiseAbs().maxCoeff());
  if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-12 * bscale)
    throw ContractError("direction matrix is not symmetric");

  const Vec k = to_vec(kappa.original());
  const DerivativeBundle d = bundle_of(spec, k);
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) total += d.hessian(i, j) * B(i, i) * B(j, j);

  const double threshold = kCoincidenceThreshold * k.maxCoeff();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      if (B(i, j) == 0.0) continue;
      double divided;
      if (std::abs(k(i) - k(j)) >= threshold) {
        divided = (d.gradient(i) - d.gradient(j)) / (k(i) - k(j));
      } else {
        Vec sym = k;
        sym(i) = sym(j) = 0.5 * (k(i) + k(j));
        const DerivativeBundle ds = bundle_of(spec, sym);
        divided = ds.hessian(i, i) - ds.hessian(i, j);
      }
      total += 2.0 * divided * B(i, j) * B(i, j);
    }
  }
  return total;
}

double dual_value(const CurvatureFunctionSpec& spec, const PrincipalCurvatureVector& mu) {
  Vec inv = to_vec(mu.original()).cwiseInverse();
  return 1.0 / eval_scaled(spec, inv, Order::kValue, nullptr, nullptr);
}

double geometric_mean_gap(const CurvatureFunctionSpec& spec, const PrincipalCurvatureVector& kappa) {
  const Vec k = to_vec(kappa.original());
  const double gm = std::exp(k.array().log().mean());
  return eval_scaled(spec, k, Order::kValue, nullptr, nullptr) - gm;
}

double inverse_concavity_margin(const CurvatureFunctionSpec& spec,
                                const PrincipalCurvatureVector& kappa) {
  const Vec k = to_vec(kappa.original());
  Vec g;
  const double f = eval_scaled(spec, k, Order::kGradient, &g, nullptr);
  return g.dot(k.cwiseProduct(k)) - f * f;
}

double ordering_margin(const CurvatureFunctionSpec& spec, const PrincipalCurvatureVector& kappa,
                       int i, int j) {
  const int n = kappa.size();
  if (i == j) throw ContractError("ordering margin needs distinct indices");
  if (i < 0 || j < 0 || i >= n || j >= n) throw ContractError("ordering margin index out of range");
  const Vec k = to_vec(kappa.original());
  Vec g;
  eval_scaled(spec, k, Order::kGradient, &g, nullptr);
  return (g(i) * k(i) - g(j) * k(j)) * (k(i) - k(j));
}

double quadform_margin(const CurvatureFunctionSpec& spec, const PrincipalCurvatureVector& kappa,
                       std::span<const double> y) {
  const int n = kappa.size();
  if (static_cast<int>(y.size()) != n) throw ContractError("y must match the curvature dimension");
  const Vec k = to_vec(kappa.original());
  const DerivativeBundle d = bundle_of(spec, k);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const double lin = d.gradient.dot(yv);
  double diag = 0.0;
  for (int i = 0; i < n; ++i) diag += d.gradient(i) * yv(i) * yv(i) / k(i);
  return yv.dot(d.hessian * yv) - lin * lin / d.value + diag;
}

Eigen::MatrixXd log_hessian(const CurvatureFunctionSpec& spec, std::span<const double> z) {
  const auto n = static_cast<Eigen::Index>(z.size());
  if (n < 1 || n > kMaxDimension) throw DomainError("log-coordinates dimension out of range");
  Vec k(n);
  for (Eigen::Index i = 0; i < n; ++i) k(i) = std::exp(z[static_cast<std::size_t>(i)]);
  const DerivativeBundle d = bundle_of(spec, k);
  const Eigen::VectorXd s = k.cwiseProduct(Eigen::VectorXd(d.gradient)) / d.value;  // dPhi/dz
  Eigen::MatrixXd h(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      h(i, j) = k(i) * k(j) * d.hessian(i, j) / d.value + (i == j ? s(i) : 0.0) - s(i) * s(j);
  return 0.5 * (h + h.transpose());
}

double log_hessian_min_eigenvalue(const CurvatureFunctionSpec& spec, std::span<const double> z) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(log_hessian(spec, z),
                                                              Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------------------
// Sampling certification

AssumptionReport check_assumption(const CurvatureFunctionSpec& spec, int n,
                                  std::int64_t sample_count, std::uint64_t seed) {
  if (sample_count < 1) throw ConfigError("sample_count must be >= 1");
  spec.validate_for(n);

  AssumptionReport rep;
  rep.dimension = n;
  rep.samples = sample_count;
  rep.seed = seed;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  rep.min_gradient = std::numeric_limits<double>::infinity();
  rep.min_log_hessian_eigenvalue = std::numeric_limits<double>::infinity();

  const std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
  rep.normalization_residual = std::abs(evaluate(spec, std::span<const double>(ones)) - 1.0);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_kappa(std::log(kSamplerLow), std::log(kSamplerHigh));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  constexpr double kScales[] = {0.5, 2.0, 10.0};

  std::vector<double> z(static_cast<std::size_t>(n));
  std::vector<double> kappa(static_cast<std::size_t>(n));
  std::vector<double> y(static_cast<std::size_t>(n));
  std::vector<double> scaled(static_cast<std::size_t>(n));
  for (std::int64_t s = 0; s < sample_count; ++s) {
    for (int i = 0; i < n; ++i) {
      z[i] = log_kappa(rng);
      kappa[i] = std::exp(z[i]);
    }
    for (int i = 0; i < n; ++i) y[i] = unit(rng);

    const PrincipalCurvatureVector kv(kappa);
    const DerivativeBundle d = derivatives(spec, kv);
    rep.min_gradient = std::min(rep.min_gradient, d.gradient.minCoeff());

    double euler = 0.0;
    for (int i = 0; i < n; ++i) euler += d.gradient(i) * kappa[i];
    rep.worst_euler_residual = std::max(rep.worst_euler_residual, std::abs(euler - d.value) / d.value);

    for (double c : kScales) {
      for (int i = 0; i < n; ++i) scaled[i] = c * kappa[i];
      const double fc = evaluate(spec, std::span<const double>(scaled));
      rep.worst_homogeneity_residual =
          std::max(rep.worst_homogeneity_residual, std::abs(fc - c * d.value) / (c * d.value));
    }

    const double margin = quadform_margin(spec, kv, y);
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_kappa = kappa;
      rep.worst_y = y;
    }
    rep.min_log_hessian_eigenvalue =
        std::min(rep.min_log_hessian_eigenvalue, log_hessian_min_eigenvalue(spec, z));
  }

  rep.monotone_ok = rep.min_gradient > 0.0;
  rep.homogeneous_ok = rep.worst_homogeneity_residual <= kAssumptionTolerance &&
                       rep.worst_euler_residual <= kAssumptionTolerance;
  rep.normalized_ok = rep.normalization_residual <= kAssumptionTolerance;
  rep.quadform_ok = rep.worst_margin >= -kAssumptionTolerance;
  rep.logconvex_ok = rep.min_log_hessian_eigenvalue >= -kAssumptionTolerance;
  return rep;
}

std::vector<CurvatureFunctionSpec> builtin_specs(int n) {
  using Spec = CurvatureFunctionSpec;
  std::vector<Spec> out;
  for (int k = 1; k <= n; ++k) out.push_back(Spec::sigma(k));
  for (double r : {0.5, 1.0, 2.0, 3.5}) out.push_back(Spec::power_mean(r));
  out.push_back(Spec::blend({{Spec::sigma(1), 0.5}, {Spec::sigma(2), 0.5}}));
  out.push_back(Spec::blend({{Spec::power_mean(0.5), 0.25}, {Spec::sigma(n), 0.75}}));
  return out;
}

}  // namespace hypflow::symfunc
