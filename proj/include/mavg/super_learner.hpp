#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mavg/model_set.hpp"
#include "mavg/numeric.hpp"

namespace mavg {

enum class LearnerBase { kOls, kMean, kStepAic, kLassoCv, kGlmInteract, kGlmInteractAic, kMma, kJma, kLae };
enum class Expansion { kNone, kInteractions, kSquares };

/// A registry entry. Names follow "<BASE>[+interactions|+squares]", e.g. "MMA+squares".
struct LearnerSpec {
  std::string name;
  LearnerBase base = LearnerBase::kOls;
  Expansion expansion = Expansion::kNone;
};

/// Throws for names outside the registry.
LearnerSpec parse_learner(std::string_view name);
/// "SL" (registry without MMA/JMA/LAE) or "SL+" (with them, each under all three expansions).
std::vector<LearnerSpec> learner_set(std::string_view set_name);
std::vector<LearnerSpec> parse_learner_list(std::string_view comma_separated);

/// Original columns, then lexicographic pairwise products or squares.
Matrix expand_features(const Matrix& x, Expansion expansion);
std::vector<std::string> expanded_names(const std::vector<std::string>& names, Expansion expansion);

/// Every learner reduces to an intercept plus a linear predictor in its
/// (expanded, pruned) design, so a fitted learner is a plain value.
struct FittedLearner {
  LearnerSpec spec;
  std::size_t inputs = 0;                   // raw covariate count seen at fit time
  Expansion design = Expansion::kNone;      // expansion actually applied to raw covariates
  std::vector<Eigen::Index> kept_columns;   // expanded columns that survived pruning
  double intercept = 0.0;
  Vector beta;                              // one per kept column
  bool fallback = false;                    // true when the learner failed and the mean was used

  Vector predict(const Matrix& x_raw) const;
};

/// Fits one learner. `ids` key any internal cross-validation; `seed` drives it.
FittedLearner fit_learner(const LearnerSpec& spec, const Matrix& x, const Vector& y, std::uint64_t seed,
                          std::span<const std::uint64_t> ids = {});

struct LevelOneMatrix {
  Matrix z;                          // n x m cross-validated predictions
  std::vector<std::size_t> folds;    // fold id per observation
  std::vector<std::string> warnings; // one per learner failure that fell back to the mean
};

LevelOneMatrix cv_level_one(const Dataset& data, const std::vector<LearnerSpec>& learners, std::size_t k,
                            std::uint64_t seed, std::span<const std::uint64_t> ids = {});

struct MetaFit {
  Vector nnls;             // raw non-negative least-squares solution
  SimplexWeights weights;  // normalized, then refined on the simplex
  bool uniform_fallback = false;
};

/// Non-negative least squares of y on Z, normalized to sum one, then refined by
/// the simplex-constrained least-squares QP started from that point.
MetaFit meta_fit(const Matrix& z, const Vector& y);
SimplexWeights meta_weights(const Matrix& z, const Vector& y);

struct SuperLearnerFit {
  std::vector<LearnerSpec> learners;
  SimplexWeights meta_weights;
  Vector nnls_weights;
  std::vector<FittedLearner> refit_models;
  Vector cv_risk;  // mean squared cross-validated error per learner
  std::vector<std::string> warnings;
};

SuperLearnerFit sl_fit(const Dataset& data, const std::vector<LearnerSpec>& learners, std::size_t k,
                       std::uint64_t seed, std::span<const std::uint64_t> ids = {});
Vector sl_predict(const SuperLearnerFit& fit, const Matrix& x_new);

}  // namespace mavg
