#include "mavg/super_learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <unordered_map>

#include "mavg/averaging.hpp"
#include "mavg/error.hpp"
#include "mavg/optimal.hpp"
#include "mavg/rng.hpp"

namespace mavg {

namespace {

struct BaseName {
  const char* name;
  LearnerBase base;
  bool expandable;
};

constexpr BaseName kBases[] = {
    {"OLS", LearnerBase::kOls, false},
    {"MEAN", LearnerBase::kMean, false},
    {"STEP_AIC", LearnerBase::kStepAic, false},
    {"LASSO_CV", LearnerBase::kLassoCv, false},
    {"GLM_INTERACT", LearnerBase::kGlmInteract, false},
    {"GLM_INTERACT_AIC", LearnerBase::kGlmInteractAic, false},
    {"MMA", LearnerBase::kMma, true},
    {"JMA", LearnerBase::kJma, true},
    {"LAE", LearnerBase::kLae, true},
};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Interaction learners always work on the pairwise design, whatever the label says.
Expansion design_of(const LearnerSpec& spec) {
  if (spec.base == LearnerBase::kGlmInteract || spec.base == LearnerBase::kGlmInteractAic)
    return Expansion::kInteractions;
  return spec.expansion;
}

// Drops constant columns and exact copies of earlier columns.
std::vector<Eigen::Index> informative_columns(const Matrix& x) {
  std::vector<Eigen::Index> kept;
  std::unordered_map<std::uint64_t, std::vector<Eigen::Index>> seen;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto col = x.col(j);
    if (x.rows() == 0 || (col.array() == col[0]).all()) continue;
    std::uint64_t h = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      std::uint64_t bits;
      const double v = col[i] == 0.0 ? 0.0 : col[i];
      std::memcpy(&bits, &v, sizeof bits);
      h = mix64(h ^ bits);
    }
    auto& bucket = seen[h];
    const bool duplicate = std::any_of(bucket.begin(), bucket.end(), [&](Eigen::Index k) { return x.col(k) == col; });
    if (duplicate) continue;
    bucket.push_back(j);
    kept.push_back(j);
  }
  return kept;
}

Matrix select_columns(const Matrix& x, const std::vector<Eigen::Index>& cols) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(cols[j]);
  return out;
}

void set_from_coefficients(FittedLearner& f, const Vector& coef) {
  f.intercept = coef[0];
  f.beta = coef.tail(coef.size() - 1);
}

FittedLearner mean_learner(const LearnerSpec& spec, const Matrix& x, const Vector& y) {
  FittedLearner f;
  f.spec = spec;
  f.inputs = static_cast<std::size_t>(x.cols());
  f.design = Expansion::kNone;
  f.intercept = y.mean();
  f.beta.resize(0);
  return f;
}

// Ids for the training rows; falls back to row positions when none are given.
std::vector<std::uint64_t> ids_or_positions(std::span<const std::uint64_t> ids, std::size_t n) {
  if (!ids.empty()) return {ids.begin(), ids.end()};
  std::vector<std::uint64_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i;
  return out;
}

std::size_t inner_folds(std::size_t n) { return std::min<std::size_t>(10, n); }

Vector lasso_cv_coefficients(const Dataset& data, std::uint64_t seed, std::span<const std::uint64_t> ids) {
  const Vector lambdas = default_lambda_sequence(data);
  const auto keyed = ids_or_positions(ids, data.n());
  const auto folds = kfold_split_keyed(keyed, inner_folds(data.n()), seed);
  const Matrix r = lasso_cv_residuals(data, lambdas, folds);
  Eigen::Index best = 0;
  r.colwise().squaredNorm().minCoeff(&best);
  const LassoPath path = lasso_path(data, lambdas.head(best + 1));
  return path.coefficients.row(best).transpose();
}

}  // namespace

LearnerSpec parse_learner(std::string_view raw) {
  const std::string name = trim(raw);
  std::string base = name;
  Expansion expansion = Expansion::kNone;
  if (const auto plus = name.find('+'); plus != std::string::npos) {
    base = name.substr(0, plus);
    const std::string suffix = name.substr(plus + 1);
    if (suffix == "interactions") {
      expansion = Expansion::kInteractions;
    } else if (suffix == "squares") {
      expansion = Expansion::kSquares;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown learner expansion in '" + name + "'");
    }
  }
  for (const auto& b : kBases) {
    if (base != b.name) continue;
    require(expansion == Expansion::kNone || b.expandable, ErrorCode::kInvalidArgument,
            "learner '" + base + "' does not take an expansion suffix");
    return LearnerSpec{name, b.base, expansion};
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown learner '" + name + "'");
}

std::vector<LearnerSpec> learner_set(std::string_view set_name) {
  std::vector<LearnerSpec> out;
  for (const char* n : {"OLS", "MEAN", "STEP_AIC", "LASSO_CV", "GLM_INTERACT", "GLM_INTERACT_AIC"})
    out.push_back(parse_learner(n));
  if (set_name == "SL") return out;
  require(set_name == "SL+", ErrorCode::kInvalidArgument, "unknown learner set '" + std::string(set_name) + "'");
  for (const char* b : {"MMA", "JMA", "LAE"})
    for (const char* s : {"", "+interactions", "+squares"}) out.push_back(parse_learner(std::string(b) + s));
  return out;
}

std::vector<LearnerSpec> parse_learner_list(std::string_view list) {
  const std::string t = trim(list);
  if (t == "SL" || t == "SL+") return learner_set(t);
  std::vector<LearnerSpec> out;
  std::stringstream ss{std::string(list)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_learner(item));
  }
  require(!out.empty(), ErrorCode::kInvalidArgument, "empty learner list");
  return out;
}

Matrix expand_features(const Matrix& x, Expansion expansion) {
  const Eigen::Index p = x.cols();
  switch (expansion) {
    case Expansion::kNone:
      return x;
    case Expansion::kSquares: {
      Matrix out(x.rows(), 2 * p);
      out.leftCols(p) = x;
      out.rightCols(p) = x.array().square().matrix();
      return out;
    }
    case Expansion::kInteractions: {
      Matrix out(x.rows(), p + p * (p - 1) / 2);
      out.leftCols(p) = x;
      Eigen::Index c = p;
      for (Eigen::Index a = 0; a < p; ++a)
        for (Eigen::Index b = a + 1; b < p; ++b) out.col(c++) = x.col(a).cwiseProduct(x.col(b));
      return out;
    }
  }
  return x;
}

std::vector<std::string> expanded_names(const std::vector<std::string>& names, Expansion expansion) {
  std::vector<std::string> out = names;
  if (expansion == Expansion::kSquares) {
    for (const auto& n : names) out.push_back(n + "^2");
  } else if (expansion == Expansion::kInteractions) {
    for (std::size_t a = 0; a < names.size(); ++a)
      for (std::size_t b = a + 1; b < names.size(); ++b) out.push_back(names[a] + ":" + names[b]);
  }
  return out;
}

Vector FittedLearner::predict(const Matrix& x_raw) const {
  require(static_cast<std::size_t>(x_raw.cols()) == inputs, ErrorCode::kDimensionMismatch,
          "learner predict: covariate count does not match the fit");
  Vector out = Vector::Constant(x_raw.rows(), intercept);
  if (kept_columns.empty()) return out;
  const Matrix expanded = expand_features(x_raw, design);
  for (std::size_t j = 0; j < kept_columns.size(); ++j) {
    out += beta[static_cast<Eigen::Index>(j)] * expanded.col(kept_columns[j]);
  }
  return out;
}

FittedLearner fit_learner(const LearnerSpec& spec, const Matrix& x, const Vector& y, std::uint64_t seed,
                          std::span<const std::uint64_t> ids) {
  require(x.rows() == y.size(), ErrorCode::kDimensionMismatch, "fit_learner: covariate rows do not match response");
  require(y.size() > 0, ErrorCode::kInvalidArgument, "fit_learner: empty data");
  require(ids.empty() || ids.size() == static_cast<std::size_t>(y.size()), ErrorCode::kDimensionMismatch,
          "fit_learner: id count does not match rows");
  if (spec.base == LearnerBase::kMean) return mean_learner(spec, x, y);

  FittedLearner f;
  f.spec = spec;
  f.inputs = static_cast<std::size_t>(x.cols());
  f.design = design_of(spec);
  const Matrix expanded = expand_features(x, f.design);
  f.kept_columns = informative_columns(expanded);
  Dataset data{y, select_columns(expanded, f.kept_columns), default_names(f.kept_columns.size())};
  data.validate();

  const std::uint64_t s = mix64(seed ^ fnv1a(spec.name));
  switch (spec.base) {
    case LearnerBase::kOls:
    case LearnerBase::kGlmInteract:
      set_from_coefficients(f, ols_fit(data).coefficients);
      break;
    case LearnerBase::kStepAic:
    case LearnerBase::kGlmInteractAic: {
      const FittedModel m = stepwise_aic(data);
      f.intercept = m.fit.coefficients[0];
      f.beta = Vector::Zero(data.x.cols());
      for (std::size_t j = 0; j < m.spec.covariates.size(); ++j)
        f.beta[static_cast<Eigen::Index>(m.spec.covariates[j])] = m.fit.coefficients[static_cast<Eigen::Index>(j + 1)];
      break;
    }
    case LearnerBase::kLassoCv:
      set_from_coefficients(f, lasso_cv_coefficients(data, s, ids));
      break;
    case LearnerBase::kMma:
      set_from_coefficients(f, mma_fit(data).coefficients);
      break;
    case LearnerBase::kJma:
      set_from_coefficients(f, jma_fit(data).coefficients);
      break;
    case LearnerBase::kLae: {
      const auto keyed = ids_or_positions(ids, data.n());
      set_from_coefficients(f, lae_fit(data, default_lambda_sequence(data), inner_folds(data.n()), s, keyed).coefficients);
      break;
    }
    case LearnerBase::kMean:
      break;
  }
  require(std::isfinite(f.intercept) && f.beta.allFinite(), ErrorCode::kNumerical,
          "learner " + spec.name + " produced non-finite coefficients");
  return f;
}

LevelOneMatrix cv_level_one(const Dataset& data, const std::vector<LearnerSpec>& learners, std::size_t k,
                            std::uint64_t seed, std::span<const std::uint64_t> ids) {
  data.validate();
  require(!learners.empty(), ErrorCode::kInvalidArgument, "cv_level_one: empty learner list");
  require(ids.empty() || ids.size() == data.n(), ErrorCode::kDimensionMismatch, "cv_level_one: id count mismatch");
  const auto keyed = ids_or_positions(ids, data.n());

  LevelOneMatrix out;
  out.folds = kfold_split_keyed(keyed, k, seed);
  out.z.resize(static_cast<Eigen::Index>(data.n()), static_cast<Eigen::Index>(learners.size()));

  for (std::size_t fold = 0; fold < k; ++fold) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < data.n(); ++i) (out.folds[i] == fold ? test : train).push_back(i);
    if (test.empty()) continue;
    const Dataset tr = data.subset_rows(train);
    const Dataset te = data.subset_rows(test);
    std::vector<std::uint64_t> train_ids;
    train_ids.reserve(train.size());
    for (auto i : train) train_ids.push_back(keyed[i]);
    const std::uint64_t fold_seed = mix64(seed + 0x9e3779b97f4a7c15ULL * (fold + 1));

    std::size_t failures = 0;
    for (std::size_t j = 0; j < learners.size(); ++j) {
      Vector pred;
      try {
        pred = fit_learner(learners[j], tr.x, tr.y, fold_seed, train_ids).predict(te.x);
        require(pred.allFinite(), ErrorCode::kNumerical, "non-finite prediction");
      } catch (const std::exception& e) {
        ++failures;
        out.warnings.push_back("learner " + learners[j].name + " failed on fold " + std::to_string(fold) + ": " +
                               e.what() + "; using the training mean");
        pred = Vector::Constant(static_cast<Eigen::Index>(test.size()), tr.y.mean());
      }
      for (std::size_t r = 0; r < test.size(); ++r)
        out.z(static_cast<Eigen::Index>(test[r]), static_cast<Eigen::Index>(j)) = pred[static_cast<Eigen::Index>(r)];
    }
    require(failures < learners.size(), ErrorCode::kNumerical,
            "cv_level_one: every learner failed on fold " + std::to_string(fold));
  }
  return out;
}

MetaFit meta_fit(const Matrix& z, const Vector& y) {
  require(z.rows() == y.size(), ErrorCode::kDimensionMismatch, "meta_weights: Z rows do not match response");
  require(z.cols() > 0 && z.rows() > 0, ErrorCode::kInvalidArgument, "meta_weights: empty level-one matrix");
  MetaFit out;
  out.nnls = solve_nnls(z, y);
  const auto m = z.cols();
  Vector start;
  if (out.nnls.sum() > 0.0) {
    start = out.nnls / out.nnls.sum();
  } else {
    out.uniform_fallback = true;
    start = Vector::Constant(m, 1.0 / static_cast<double>(m));
  }
  if (m == 1) {
    out.weights = SimplexWeights::unit(1, 0);
    return out;
  }
  const Matrix q = z.transpose() * z;
  const Vector c = -(z.transpose() * y);
  const QpSolution sol = solve_simplex_qp(q, c, {}, start);
  // Keep the normalized NNLS point if refinement could not improve on it.
  const double start_obj = simplex_qp_objective(q, c, start);
  out.weights = SimplexWeights(sol.objective <= start_obj ? sol.weights : project_to_simplex(start));
  return out;
}

SimplexWeights meta_weights(const Matrix& z, const Vector& y) { return meta_fit(z, y).weights; }

SuperLearnerFit sl_fit(const Dataset& data, const std::vector<LearnerSpec>& learners, std::size_t k,
                       std::uint64_t seed, std::span<const std::uint64_t> ids) {
  const LevelOneMatrix level_one = cv_level_one(data, learners, k, seed, ids);
  SuperLearnerFit out;
  out.learners = learners;
  out.warnings = level_one.warnings;
  const MetaFit meta = meta_fit(level_one.z, data.y);
  out.meta_weights = meta.weights;
  out.nnls_weights = meta.nnls;
  if (meta.uniform_fallback) out.warnings.push_back("meta step: NNLS returned all zeros; using uniform weights");
  out.cv_risk = (level_one.z.colwise() - data.y).colwise().squaredNorm().transpose() / static_cast<double>(data.n());

  const auto keyed = ids_or_positions(ids, data.n());
  const std::uint64_t full_seed = mix64(seed);
  for (const auto& spec : learners) {
    try {
      out.refit_models.push_back(fit_learner(spec, data.x, data.y, full_seed, keyed));
    } catch (const std::exception& e) {
      out.warnings.push_back("learner " + spec.name + " failed on the full data: " + e.what() +
                             "; using the mean");
      FittedLearner f = mean_learner(spec, data.x, data.y);
      f.fallback = true;
      out.refit_models.push_back(std::move(f));
    }
  }
  return out;
}

Vector sl_predict(const SuperLearnerFit& fit, const Matrix& x_new) {
  require(fit.refit_models.size() == fit.meta_weights.size(), ErrorCode::kDimensionMismatch,
          "sl_predict: weight count does not match learner count");
  Vector out = Vector::Zero(x_new.rows());
  for (std::size_t j = 0; j < fit.refit_models.size(); ++j) {
    const double w = fit.meta_weights[j];
    if (w == 0.0) continue;
    out += w * fit.refit_models[j].predict(x_new);
  }
  return out;
}

}  // namespace mavg
