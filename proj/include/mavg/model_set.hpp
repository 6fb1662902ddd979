#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mavg/numeric.hpp"

namespace mavg {

/// Response vector plus covariate matrix with named columns.
struct Dataset {
  Vector y;
  Matrix x;  // n x p, no intercept column
  std::vector<std::string> names;

  std::size_t n() const noexcept { return static_cast<std::size_t>(y.size()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(x.cols()); }

  /// Throws when row counts disagree, names are not unique or values are not finite.
  void validate() const;
  Dataset subset_rows(const std::vector<std::size_t>& rows) const;
};

/// Names "X1".."Xp".
std::vector<std::string> default_names(std::size_t p);

struct ModelSpec {
  std::vector<std::size_t> covariates;  // 0-based column indices, in fitting order
  bool include_intercept = true;

  bool operator==(const ModelSpec&) const = default;
};

struct FittedModel {
  ModelSpec spec;
  LsqFit fit;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  std::size_t n_params = 0;  // rank of the design plus one for the variance
  bool variance_floored = false;

  /// Coefficient (design column `j`) and its sampling variance sigma2 * [(X'X)^-1]_jj.
  double coefficient_variance(std::size_t design_column) const;
};

/// Intercept (if requested) followed by the selected columns.
Matrix build_design(const Matrix& x, const ModelSpec& spec);

std::vector<ModelSpec> enumerate_nested(std::size_t p, bool include_intercept = true);
std::vector<ModelSpec> enumerate_all_subsets(std::size_t p, std::size_t cap = 20);

FittedModel fit_model(const Dataset& data, const ModelSpec& spec);
std::vector<FittedModel> fit_candidates(const Dataset& data, const std::vector<ModelSpec>& specs);

/// Gaussian log-likelihood at the ML variance rss/n; the variance is floored at 1e-300.
double gaussian_loglik(double rss, std::size_t n, bool* floored = nullptr);

/// Bidirectional stepwise search on AIC starting from the full model.
/// Returns the first local minimum; ties resolve toward the lower column index.
FittedModel stepwise_aic(const Dataset& data);

}  // namespace mavg
