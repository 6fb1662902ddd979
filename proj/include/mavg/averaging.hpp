#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mavg/model_set.hpp"
#include "mavg/numeric.hpp"

namespace mavg {

enum class Method { kFma, kBma, kMma, kJma, kLae, kOls, kMs };

std::string_view method_name(Method m);

/// Result of an averaging (or single-model) estimator. Coefficient index 0 is
/// the intercept; index j >= 1 is covariate j-1. Excluded covariates contribute 0.
struct AveragedFit {
  Method method = Method::kOls;
  SimplexWeights weights;  // over candidate models, or over tuning values for LAE
  Vector coefficients;
  Vector std_errors;
  Vector ci_lower;
  Vector ci_upper;
  double level = 0.95;
  std::vector<std::string> names;  // "(Intercept)" followed by covariate names

  Vector predict(const Matrix& x) const;
};

enum class Criterion { kAic, kBic };

/// w_k proportional to exp(-criterion_k / 2), computed after subtracting the minimum.
SimplexWeights criterion_weights(const Vector& criteria, Criterion kind = Criterion::kAic);

/// Coefficients of each model, scattered onto the p+1 full-model positions.
Matrix padded_coefficients(const std::vector<FittedModel>& models, std::size_t p);
/// Per-model coefficient variances on the same layout (0 where a covariate is excluded).
Matrix padded_variances(const std::vector<FittedModel>& models, std::size_t p);

Vector average_coefficients(const std::vector<FittedModel>& models, const SimplexWeights& w, std::size_t p);

/// Square root of the Buckland et al. variance: sum_k w_k sqrt(var_k + (b_k - b_bar)^2).
double buckland_se(const Vector& betas, const Vector& variances, const SimplexWeights& w);
/// Law-of-total-variance decomposition: sum_k w_k var_k + sum_k w_k (b_k - b_bar)^2.
double bayes_variance(const Vector& betas, const Vector& variances, const SimplexWeights& w);

std::pair<double, double> normal_interval(double estimate, double se, double level);

enum class VarianceRule { kBuckland, kBayes };

/// Averages per-model coefficient rows (k x (p+1)) and attaches standard errors and intervals.
AveragedFit combine_padded(Method method, const Matrix& betas, const Matrix& variances, const SimplexWeights& w,
                           const Dataset& data, VarianceRule rule, double level = 0.95);

/// Averaged coefficients, standard errors and normal intervals for fixed weights.
AveragedFit combine_models(Method method, const std::vector<FittedModel>& models, const SimplexWeights& w,
                           const Dataset& data, VarianceRule rule, double level = 0.95);

AveragedFit ols_fit(const Dataset& data, double level = 0.95);
/// Model selected by stepwise AIC.
AveragedFit ms_fit(const Dataset& data, double level = 0.95);
/// AIC-weighted average over `models` (defaults to all subsets when empty).
AveragedFit fma_fit(const Dataset& data, const std::vector<FittedModel>& models, double level = 0.95);
/// BIC-weighted average with the total-variance standard errors.
AveragedFit bma_fit(const Dataset& data, const std::vector<FittedModel>& models, double level = 0.95);

}  // namespace mavg
