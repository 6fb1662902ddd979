#include <algorithm>
#include <cmath>
#include <limits>

#include "mavg/averaging.hpp"
#include "mavg/error.hpp"

namespace mavg {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kFma: return "FMA";
    case Method::kBma: return "BMA";
    case Method::kMma: return "MMA";
    case Method::kJma: return "JMA";
    case Method::kLae: return "LAE";
    case Method::kOls: return "OLS";
    case Method::kMs: return "MS";
  }
  return "?";
}

Vector AveragedFit::predict(const Matrix& x) const {
  require(x.cols() + 1 == coefficients.size(), ErrorCode::kDimensionMismatch,
          "predict: covariate count does not match the fit");
  return (x * coefficients.tail(coefficients.size() - 1)).array() + coefficients[0];
}

SimplexWeights criterion_weights(const Vector& criteria, Criterion /*kind*/) {
  require(criteria.size() > 0, ErrorCode::kInvalidArgument, "criterion_weights: empty input");
  require(criteria.allFinite(), ErrorCode::kNumerical, "criterion_weights: non-finite criterion");
  const double best = criteria.minCoeff();
  Vector w = (-(criteria.array() - best) / 2.0).exp().matrix();
  w /= w.sum();
  return SimplexWeights(std::move(w));
}

Matrix padded_coefficients(const std::vector<FittedModel>& models, std::size_t p) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(models.size()), static_cast<Eigen::Index>(p + 1));
  for (std::size_t k = 0; k < models.size(); ++k) {
    const auto& m = models[k];
    const Eigen::Index offset = m.spec.include_intercept ? 1 : 0;
    if (m.spec.include_intercept) out(static_cast<Eigen::Index>(k), 0) = m.fit.coefficients[0];
    for (std::size_t j = 0; j < m.spec.covariates.size(); ++j) {
      require(m.spec.covariates[j] < p, ErrorCode::kDimensionMismatch, "average: covariate index exceeds p");
      out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m.spec.covariates[j] + 1)) =
          m.fit.coefficients[offset + static_cast<Eigen::Index>(j)];
    }
  }
  return out;
}

Matrix padded_variances(const std::vector<FittedModel>& models, std::size_t p) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(models.size()), static_cast<Eigen::Index>(p + 1));
  for (std::size_t k = 0; k < models.size(); ++k) {
    const auto& m = models[k];
    const std::size_t offset = m.spec.include_intercept ? 1 : 0;
    if (m.spec.include_intercept) out(static_cast<Eigen::Index>(k), 0) = m.coefficient_variance(0);
    for (std::size_t j = 0; j < m.spec.covariates.size(); ++j)
      out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m.spec.covariates[j] + 1)) =
          m.coefficient_variance(offset + j);
  }
  return out;
}

Vector average_coefficients(const std::vector<FittedModel>& models, const SimplexWeights& w, std::size_t p) {
  require(models.size() == w.size(), ErrorCode::kDimensionMismatch,
          "average_coefficients: weight count does not match model count");
  return padded_coefficients(models, p).transpose() * w.values();
}

namespace {

void check_moment_inputs(const Vector& betas, const Vector& variances, const SimplexWeights& w) {
  require(betas.size() == variances.size() && static_cast<std::size_t>(betas.size()) == w.size(),
          ErrorCode::kDimensionMismatch, "model-averaged variance: length mismatch");
  require((variances.array() >= 0.0).all(), ErrorCode::kInvalidArgument,
          "model-averaged variance: negative variance input");
}

}  // namespace

double buckland_se(const Vector& betas, const Vector& variances, const SimplexWeights& w) {
  check_moment_inputs(betas, variances, w);
  const double bar = w.values().dot(betas);
  double se = 0.0;
  for (Eigen::Index k = 0; k < betas.size(); ++k) {
    const double d = betas[k] - bar;
    se += w.values()[k] * std::sqrt(variances[k] + d * d);
  }
  return se;
}

double bayes_variance(const Vector& betas, const Vector& variances, const SimplexWeights& w) {
  check_moment_inputs(betas, variances, w);
  const double bar = w.values().dot(betas);
  const double within = w.values().dot(variances);
  const double between = w.values().dot((betas.array() - bar).square().matrix());
  return within + between;
}

std::pair<double, double> normal_interval(double estimate, double se, double level) {
  require(level > 0.0 && level < 1.0, ErrorCode::kInvalidArgument, "normal_interval: level outside (0,1)");
  require(se >= 0.0, ErrorCode::kInvalidArgument, "normal_interval: negative standard error");
  const double z = normal_quantile(0.5 * (1.0 + level));
  return {estimate - z * se, estimate + z * se};
}

AveragedFit combine_padded(Method method, const Matrix& betas, const Matrix& vars, const SimplexWeights& w,
                           const Dataset& data, VarianceRule rule, double level) {
  const std::size_t p = data.p();
  require(static_cast<std::size_t>(betas.rows()) == w.size() && betas.rows() == vars.rows(),
          ErrorCode::kDimensionMismatch, "combine: weight count does not match model count");
  require(betas.cols() == static_cast<Eigen::Index>(p + 1) && vars.cols() == betas.cols(),
          ErrorCode::kDimensionMismatch, "combine: coefficient layout does not match the dataset");

  AveragedFit out;
  out.method = method;
  out.weights = w;
  out.level = level;
  out.coefficients = betas.transpose() * w.values();
  const auto cols = static_cast<Eigen::Index>(p + 1);
  out.std_errors.resize(cols);
  out.ci_lower.resize(cols);
  out.ci_upper.resize(cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const Vector b = betas.col(j);
    const Vector v = vars.col(j);
    out.std_errors[j] = rule == VarianceRule::kBuckland ? buckland_se(b, v, w) : std::sqrt(bayes_variance(b, v, w));
    const auto [lo, hi] = normal_interval(out.coefficients[j], out.std_errors[j], level);
    out.ci_lower[j] = lo;
    out.ci_upper[j] = hi;
  }
  out.names.push_back("(Intercept)");
  out.names.insert(out.names.end(), data.names.begin(), data.names.end());
  return out;
}

AveragedFit combine_models(Method method, const std::vector<FittedModel>& models, const SimplexWeights& w,
                           const Dataset& data, VarianceRule rule, double level) {
  require(models.size() == w.size(), ErrorCode::kDimensionMismatch, "combine_models: weight count mismatch");
  return combine_padded(method, padded_coefficients(models, data.p()), padded_variances(models, data.p()), w, data,
                        rule, level);
}

AveragedFit ols_fit(const Dataset& data, double level) {
  std::vector<ModelSpec> full{enumerate_nested(data.p()).back()};
  const auto models = fit_candidates(data, full);
  return combine_models(Method::kOls, models, SimplexWeights::unit(1, 0), data, VarianceRule::kBuckland, level);
}

AveragedFit ms_fit(const Dataset& data, double level) {
  std::vector<FittedModel> models{stepwise_aic(data)};
  return combine_models(Method::kMs, models, SimplexWeights::unit(1, 0), data, VarianceRule::kBuckland, level);
}

namespace {

Vector collect(const std::vector<FittedModel>& models, Criterion kind) {
  Vector v(static_cast<Eigen::Index>(models.size()));
  for (std::size_t k = 0; k < models.size(); ++k)
    v[static_cast<Eigen::Index>(k)] = kind == Criterion::kAic ? models[k].aic : models[k].bic;
  return v;
}

std::vector<FittedModel> default_models(const Dataset& data, const std::vector<FittedModel>& models) {
  if (!models.empty()) return models;
  return fit_candidates(data, enumerate_all_subsets(data.p()));
}

}  // namespace

AveragedFit fma_fit(const Dataset& data, const std::vector<FittedModel>& models, double level) {
  const auto fitted = default_models(data, models);
  const auto w = criterion_weights(collect(fitted, Criterion::kAic), Criterion::kAic);
  return combine_models(Method::kFma, fitted, w, data, VarianceRule::kBuckland, level);
}

AveragedFit bma_fit(const Dataset& data, const std::vector<FittedModel>& models, double level) {
  const auto fitted = default_models(data, models);
  const auto w = criterion_weights(collect(fitted, Criterion::kBic), Criterion::kBic);
  return combine_models(Method::kBma, fitted, w, data, VarianceRule::kBayes, level);
}

}  // namespace mavg
