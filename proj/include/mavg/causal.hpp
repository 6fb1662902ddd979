#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mavg/super_learner.hpp"
#include "mavg/synthetic.hpp"
#include "mavg/treatment.hpp"

namespace mavg {

/// Regressor names at each backward step.
std::vector<std::string> history_names();

/// History regressors at time t: V1..V3, L1..L3 at t, A at t, A at t-1, Y at t-1.
/// Treatment columns come from `treatment` (observed or counterfactual), not from the panel.
Matrix history_matrix(const LongitudinalPanel& panel, const Matrix& treatment, std::size_t t,
                      const std::vector<std::size_t>& rows);

/// Counterfactual treatment path for every subject where its confounders are observed.
Matrix counterfactual_treatment(const LongitudinalPanel& panel, const TreatmentRule& rule);

struct GFormulaStep {
  std::size_t t = 0;
  std::size_t n_fit = 0;
  std::size_t n_predict = 0;
  Vector weights;  // meta weights per learner
  std::vector<std::string> warnings;
};

struct GFormulaResult {
  double psi_hat = 0.0;
  TreatmentRule rule;
  std::vector<std::string> learner_names;
  std::vector<GFormulaStep> steps;  // in the order computed, t = T first
};

GFormulaResult sequential_gformula(const LongitudinalPanel& panel, const TreatmentRule& rule,
                                   const std::vector<LearnerSpec>& learners, std::size_t k, std::uint64_t seed);

struct TruthEstimate {
  double mean = 0.0;
  double mc_se = 0.0;
  std::size_t n = 0;
};

/// Mean counterfactual outcome at `horizon` over N intervened subjects, streamed without storing them.
TruthEstimate truth_oracle(const TreatmentRule& rule, std::size_t n, std::uint64_t seed, std::size_t horizon = 6);

}  // namespace mavg
