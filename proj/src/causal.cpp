#include "mavg/causal.hpp"

#include <cmath>
#include <limits>

#include "mavg/error.hpp"

namespace mavg {

std::vector<std::string> history_names() { return {"V1", "V2", "V3", "L1", "L2", "L3", "A", "A_prev", "Y_prev"}; }

Matrix history_matrix(const LongitudinalPanel& panel, const Matrix& treatment, std::size_t t,
                      const std::vector<std::size_t>& rows) {
  const auto tc = static_cast<Eigen::Index>(t);
  Matrix h(static_cast<Eigen::Index>(rows.size()), 9);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(rows[k]);
    const auto r = static_cast<Eigen::Index>(k);
    h(r, 0) = panel.v1[i];
    h(r, 1) = panel.v2[i];
    h(r, 2) = panel.v3[i];
    h(r, 3) = panel.l1(i, tc);
    h(r, 4) = panel.l2(i, tc);
    h(r, 5) = panel.l3(i, tc);
    h(r, 6) = treatment(i, tc);
    h(r, 7) = t == 0 ? 0.0 : treatment(i, tc - 1);
    h(r, 8) = t == 0 ? 0.0 : panel.y(i, tc - 1);
  }
  return h;
}

Matrix counterfactual_treatment(const LongitudinalPanel& panel, const TreatmentRule& rule) {
  Matrix a = Matrix::Constant(static_cast<Eigen::Index>(panel.n()), static_cast<Eigen::Index>(panel.horizon + 1),
                              std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    // Baseline treatment is not intervened on; the rule takes over from t = 1.
    a(i, 0) = 0.0;
    for (Eigen::Index t = 1; t < a.cols(); ++t) {
      if (!std::isfinite(panel.l1(i, t))) break;
      a(i, t) = apply_rule(rule, panel.l1(i, t), panel.l2(i, t), panel.l3(i, t), static_cast<int>(a(i, t - 1)));
    }
  }
  return a;
}

GFormulaResult sequential_gformula(const LongitudinalPanel& panel, const TreatmentRule& rule,
                                   const std::vector<LearnerSpec>& learners, std::size_t k, std::uint64_t seed) {
  panel.validate();
  require(!learners.empty(), ErrorCode::kInvalidArgument, "sequential_gformula: empty learner list");
  const std::size_t n = panel.n();
  const std::size_t horizon = panel.horizon;
  const Matrix counterfactual = counterfactual_treatment(panel, rule);

  GFormulaResult out;
  out.rule = rule;
  for (const auto& l : learners) out.learner_names.push_back(l.name);

  // target[i] holds the current pseudo-outcome for subjects uncensored through t.
  Vector target = panel.y.col(static_cast<Eigen::Index>(horizon));
  for (std::size_t step = 0; step <= horizon; ++step) {
    const std::size_t t = horizon - step;
    std::vector<std::size_t> fit_rows, predict_rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (panel.uncensored_through(i, t)) fit_rows.push_back(i);
      if (t == 0 || panel.uncensored_through(i, t - 1)) predict_rows.push_back(i);
    }
    if (fit_rows.empty())
      throw Error(ErrorCode::kInvalidArgument, "sequential_gformula: no uncensored subjects at t=" + std::to_string(t));

    Dataset data;
    data.x = history_matrix(panel, panel.a, t, fit_rows);
    data.y.resize(static_cast<Eigen::Index>(fit_rows.size()));
    std::vector<std::uint64_t> ids;
    ids.reserve(fit_rows.size());
    for (std::size_t r = 0; r < fit_rows.size(); ++r) {
      data.y[static_cast<Eigen::Index>(r)] = target[static_cast<Eigen::Index>(fit_rows[r])];
      ids.push_back(panel.ids[fit_rows[r]]);
    }
    data.names = history_names();
    require(data.y.allFinite(), ErrorCode::kNumerical,
            "sequential_gformula: missing outcome among uncensored subjects at t=" + std::to_string(t));

    const std::size_t folds = std::min(k, fit_rows.size());
    const std::uint64_t step_seed = mix64(seed ^ (0xa24baed4963ee407ULL * (t + 1)));
    const SuperLearnerFit fit = sl_fit(data, learners, folds, step_seed, ids);
    const Vector pred = sl_predict(fit, history_matrix(panel, counterfactual, t, predict_rows));
    require(pred.allFinite(), ErrorCode::kNumerical,
            "sequential_gformula: non-finite prediction at t=" + std::to_string(t));

    GFormulaStep diag;
    diag.t = t;
    diag.n_fit = fit_rows.size();
    diag.n_predict = predict_rows.size();
    diag.weights = fit.meta_weights.values();
    diag.warnings = fit.warnings;
    out.steps.push_back(std::move(diag));

    target.setConstant(std::numeric_limits<double>::quiet_NaN());
    for (std::size_t r = 0; r < predict_rows.size(); ++r)
      target[static_cast<Eigen::Index>(predict_rows[r])] = pred[static_cast<Eigen::Index>(r)];
    if (t == 0) out.psi_hat = pred.mean();
  }
  return out;
}

TruthEstimate truth_oracle(const TreatmentRule& rule, std::size_t n, std::uint64_t seed, std::size_t horizon) {
  require(n >= 2, ErrorCode::kInvalidArgument, "truth_oracle: need at least two subjects");
  const Rng root(seed);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng child = root.child(i);
    const double y = simulate_subject(horizon, child, rule).y[horizon];
    const double delta = y - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (y - mean);
  }
  TruthEstimate out;
  out.n = n;
  out.mean = mean;
  out.mc_se = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  return out;
}

}  // namespace mavg
