#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mavg/causal.hpp"
#include "mavg/error.hpp"

using namespace mavg;

namespace {

// Panel with confounders that ignore treatment and Y_t = Y_{t-1} + effect * A_t + noise.
// The threshold rule is never triggered, so its counterfactual is "never treat".
LongitudinalPanel additive_panel(std::size_t n, std::size_t horizon, double effect, std::uint64_t seed) {
  Rng rng(seed);
  LongitudinalPanel p;
  p.resize(n, horizon);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    p.ids[i] = i;
    p.v1[r] = rng.bernoulli(0.7) ? 1.0 : 0.0;
    p.v2[r] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    p.v3[r] = rng.uniform(1.0, 5.0);
    double y = rng.normal(0.5 * p.v3[r], 1.0);
    double a = 0.0;
    for (Eigen::Index t = 0; t <= static_cast<Eigen::Index>(horizon); ++t) {
      p.l1(r, t) = 1000.0 + 50.0 * rng.normal();
      p.l2(r, t) = 0.5 + 0.01 * rng.normal();
      p.l3(r, t) = 0.2 * rng.normal();
      if (t > 0) {
        if (a == 0.0 && rng.bernoulli(0.3)) a = 1.0;
        y += effect * a + 0.1 * p.l3(r, t) + rng.normal(0.0, 0.5);
      }
      p.a(r, t) = a;
      p.c(r, t) = 0.0;
      p.y(r, t) = y;
    }
  }
  p.validate();
  return p;
}

std::vector<LearnerSpec> linear_learners() { return {parse_learner("OLS"), parse_learner("STEP_AIC")}; }

}  // namespace

TEST_CASE("treatment rules") {
  const auto always = TreatmentRule::always();
  const auto threshold = TreatmentRule::threshold();
  CHECK(apply_rule(always, 5000, 0.9, 3, 0) == 1);
  CHECK(apply_rule(threshold, 340, 0.5, 0, 0) == 1);
  CHECK(apply_rule(threshold, 400, 0.20, 0, 0) == 0);
  CHECK(apply_rule(threshold, 400, 0.14, 0, 0) == 1);
  CHECK(apply_rule(threshold, 400, 0.20, -2.5, 0) == 1);
  CHECK(apply_rule(threshold, 400, 0.20, 0, 1) == 1);
  CHECK(apply_rule(TreatmentRule::threshold(false), 400, 0.20, 0, 1) == 0);
  CHECK(parse_rule("THRESHOLD").kind == TreatmentRule::Kind::kThreshold);
  CHECK(parse_rule("always").kind == TreatmentRule::Kind::kAlways);
  CHECK_THROWS_AS(parse_rule("sometimes"), Error);
}

TEST_CASE("history regressors at t = 0 have no past") {
  const auto panel = simulate_longitudinal(20, 3, Rng(1));
  std::vector<std::size_t> rows(20);
  std::iota(rows.begin(), rows.end(), 0);
  const Matrix h = history_matrix(panel, panel.a, 0, rows);
  REQUIRE(h.cols() == static_cast<Eigen::Index>(history_names().size()));
  CHECK(h.col(7).cwiseAbs().maxCoeff() == 0.0);
  CHECK(h.col(8).cwiseAbs().maxCoeff() == 0.0);
  const Matrix h2 = history_matrix(panel, panel.a, 1, {0, 1});
  CHECK(h2(0, 8) == panel.y(0, 0));
  CHECK(h2(1, 3) == panel.l1(1, 1));
}

TEST_CASE("counterfactual treatment paths") {
  const auto panel = simulate_longitudinal(200, 4, Rng(2));
  const Matrix always = counterfactual_treatment(panel, TreatmentRule::always());
  const Matrix thr = counterfactual_treatment(panel, TreatmentRule::threshold());
  for (Eigen::Index i = 0; i < 200; ++i) {
    CHECK(always(i, 0) == 0.0);
    CHECK(thr(i, 0) == 0.0);
    for (Eigen::Index t = 1; t <= 4; ++t) {
      if (std::isnan(panel.l1(i, t))) continue;
      CHECK(always(i, t) == 1.0);
      CHECK(thr(i, t) >= thr(i, t - 1));
    }
  }
}

TEST_CASE("horizon 0 reduces to the mean of Y0") {
  const auto panel = simulate_longitudinal(150, 0, Rng(3));
  const auto res = sequential_gformula(panel, TreatmentRule::always(), {parse_learner("MEAN")}, 5, 1);
  CHECK(res.psi_hat == doctest::Approx(panel.y.col(0).mean()).epsilon(1e-13));
  REQUIRE(res.steps.size() == 1);
  CHECK(res.steps[0].t == 0);
}

TEST_CASE("known additive effect is recovered") {
  const double effect = 1.0;
  const std::size_t horizon = 3;
  const auto panel = additive_panel(2000, horizon, effect, 4);
  const auto always = sequential_gformula(panel, TreatmentRule::always(), linear_learners(), 5, 7);
  const auto never = sequential_gformula(panel, TreatmentRule::threshold(), linear_learners(), 5, 7);
  // Always treating adds effect at each of t = 1..T; the threshold rule never fires here.
  CHECK(always.psi_hat - never.psi_hat == doctest::Approx(effect * horizon).epsilon(0.05));
  CHECK(never.psi_hat == doctest::Approx(panel.y.col(0).mean()).epsilon(0.05));
}

TEST_CASE("null-effect panel gives the same answer under both rules") {
  const auto panel = additive_panel(2000, 3, 0.0, 5);
  const auto always = sequential_gformula(panel, TreatmentRule::always(), linear_learners(), 5, 9);
  const auto thr = sequential_gformula(panel, TreatmentRule::threshold(), linear_learners(), 5, 9);
  const Vector yt = panel.y.col(3);
  const double se = std::sqrt((yt.array() - yt.mean()).square().sum() / (2000.0 - 1.0) / 2000.0);
  CHECK(std::abs(always.psi_hat - thr.psi_hat) < 3.0 * se);
}

TEST_CASE("estimate does not depend on subject order") {
  const auto panel = simulate_longitudinal(300, 3, Rng(6));
  LongitudinalPanel shuffled;
  shuffled.resize(300, 3);
  for (std::size_t i = 0; i < 300; ++i) {
    const std::size_t src = (i * 37 + 11) % 300;
    const auto r = static_cast<Eigen::Index>(i);
    const auto s = static_cast<Eigen::Index>(src);
    shuffled.ids[i] = panel.ids[src];
    shuffled.v1[r] = panel.v1[s];
    shuffled.v2[r] = panel.v2[s];
    shuffled.v3[r] = panel.v3[s];
    shuffled.l1.row(r) = panel.l1.row(s);
    shuffled.l2.row(r) = panel.l2.row(s);
    shuffled.l3.row(r) = panel.l3.row(s);
    shuffled.a.row(r) = panel.a.row(s);
    shuffled.c.row(r) = panel.c.row(s);
    shuffled.y.row(r) = panel.y.row(s);
  }
  const auto learners = parse_learner_list("OLS,MEAN,LASSO_CV");
  const auto a = sequential_gformula(panel, TreatmentRule::threshold(), learners, 5, 21);
  const auto b = sequential_gformula(shuffled, TreatmentRule::threshold(), learners, 5, 21);
  CHECK(a.psi_hat == doctest::Approx(b.psi_hat).epsilon(1e-9));
}

TEST_CASE("fully censored time point is reported") {
  auto panel = additive_panel(30, 2, 0.0, 8);
  for (Eigen::Index i = 0; i < 30; ++i) {
    panel.c(i, 1) = 1.0;
    panel.y(i, 1) = std::nan("");
    panel.l1(i, 2) = panel.l2(i, 2) = panel.l3(i, 2) = panel.a(i, 2) = panel.c(i, 2) = panel.y(i, 2) = std::nan("");
  }
  try {
    sequential_gformula(panel, TreatmentRule::always(), {parse_learner("MEAN")}, 5, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("t=2") != std::string::npos);
  }
}

TEST_CASE("per-step diagnostics") {
  const auto panel = simulate_longitudinal(400, 2, Rng(9));
  const auto res = sequential_gformula(panel, TreatmentRule::always(), parse_learner_list("OLS,MEAN"), 5, 3);
  REQUIRE(res.steps.size() == 3);
  CHECK(res.steps[0].t == 2);
  CHECK(res.steps[2].n_predict == 400);
  for (const auto& s : res.steps) {
    CHECK(s.weights.sum() == doctest::Approx(1.0));
    CHECK(s.n_fit <= s.n_predict);
  }
  CHECK(std::isfinite(res.psi_hat));
}

TEST_CASE("truth oracle agrees with itself across seeds") {
  const auto a = truth_oracle(TreatmentRule::always(), 100000, 1);
  const auto b = truth_oracle(TreatmentRule::always(), 100000, 2);
  CHECK(std::abs(a.mean - b.mean) < 3.0 * std::hypot(a.mc_se, b.mc_se));
  CHECK(a.n == 100000);
  const auto c = truth_oracle(TreatmentRule::always(), 1000, 1);
  const auto d = truth_oracle(TreatmentRule::always(), 1000, 1);
  CHECK(c.mean == d.mean);
}
