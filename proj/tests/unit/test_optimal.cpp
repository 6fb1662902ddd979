#include <cmath>
#include <limits>

#include "doctest.h"
#include "mavg/error.hpp"
#include "mavg/optimal.hpp"
#include "mavg/rng.hpp"

using namespace mavg;

namespace {

Dataset linear_data(std::size_t n, std::size_t p, std::uint64_t seed, double sd = 1.0) {
  Rng rng(seed);
  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  d.y.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    double mu = 0.5;
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
      d.x(i, j) = rng.normal();
      mu += d.x(i, j) / static_cast<double>(j + 1);
    }
    d.y[i] = mu + sd * rng.normal();
  }
  d.names = default_names(p);
  return d;
}

// Least-squares fitted values of y on an intercept plus the given columns.
Vector fitted(const Dataset& d, const std::vector<std::size_t>& cols) {
  Matrix x(d.x.rows(), static_cast<Eigen::Index>(cols.size()) + 1);
  x.col(0).setOnes();
  for (std::size_t j = 0; j < cols.size(); ++j) x.col(static_cast<Eigen::Index>(j) + 1) = d.x.col(static_cast<Eigen::Index>(cols[j]));
  return x * x.colPivHouseholderQr().solve(d.y);
}

}  // namespace

TEST_CASE("nested sequence detection") {
  CHECK(is_nested_sequence(enumerate_nested(4)));
  CHECK_FALSE(is_nested_sequence(enumerate_all_subsets(2)));
  CHECK_FALSE(is_nested_sequence({}));
}

TEST_CASE("residual bundle matches one-by-one fits") {
  const Dataset d = linear_data(40, 4, 1);
  const auto nested = fit_residual_bundle(d, enumerate_nested(4));
  const auto models = fit_candidates(d, enumerate_nested(4));
  for (std::size_t k = 0; k < models.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    CHECK((nested.residuals.col(kk) - models[k].fit.residuals).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((nested.hat_diag.col(kk) - models[k].fit.hat_diag).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(nested.ranks[k] == models[k].fit.rank);
  }
  CHECK((nested.coefficients - padded_coefficients(models, 4)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((nested.variances - padded_variances(models, 4)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(nested.sigma2_full == doctest::Approx(models.back().fit.sigma2));
  CHECK(nested.sigma2_full >= 0.0);
}

TEST_CASE("MMA: single candidate") {
  const Dataset d = linear_data(30, 2, 2);
  const auto fit = mma_fit(d, {ModelSpec{{0, 1}, true}});
  CHECK(fit.weights[0] == 1.0);
  CHECK((fit.coefficients - ols_fit(d).coefficients).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("MMA: two nested candidates match the grid oracle") {
  const Dataset d = linear_data(50, 2, 3, 3.0);
  const std::vector<ModelSpec> specs{ModelSpec{{0}, true}, ModelSpec{{0, 1}, true}};
  const Vector small = fitted(d, {0});
  const Vector large = fitted(d, {0, 1});
  const double sigma2 = (d.y - large).squaredNorm() / (50.0 - 3.0);
  auto criterion = [&](double w) {
    return (d.y - w * small - (1.0 - w) * large).squaredNorm() + 2.0 * sigma2 * (w * 2.0 + (1.0 - w) * 3.0);
  };
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 1000; ++i) best = std::min(best, criterion(i * 1e-3));
  const auto fit = mma_fit(d, specs);
  CHECK(std::abs(criterion(fit.weights[0]) - best) < 1e-4);
  Vector w(2);
  w << fit.weights[0], fit.weights[1];
  CHECK(mallows_criterion(fit_residual_bundle(d, specs), w) == doctest::Approx(criterion(fit.weights[0])));
}

TEST_CASE("MMA and JMA: duplicated candidates share weight and keep predictions") {
  const Dataset d = linear_data(40, 3, 4);
  const std::vector<ModelSpec> base{ModelSpec{{0}, true}, ModelSpec{{0, 1, 2}, true}};
  const std::vector<ModelSpec> dup{base[0], base[0], base[1]};
  for (int jack = 0; jack < 2; ++jack) {
    const auto one = jack ? jma_fit(d, base) : mma_fit(d, base);
    const auto two = jack ? jma_fit(d, dup) : mma_fit(d, dup);
    CHECK(std::abs(two.weights[0] - two.weights[1]) < 1e-6);
    CHECK((one.predict(d.x) - two.predict(d.x)).cwiseAbs().maxCoeff() < 1e-6);
  }
  CHECK(jma_fit(d, {base[1]}).weights[0] == 1.0);
}

TEST_CASE("JMA: leave-one-out shortcut equals explicit refits") {
  const Dataset d = linear_data(30, 3, 5);
  const auto specs = enumerate_nested(3);  // k = 4
  const Matrix shortcut = loo_residuals(fit_residual_bundle(d, specs));
  for (std::size_t k = 0; k < specs.size(); ++k) {
    for (std::size_t i = 0; i < 30; ++i) {
      std::vector<std::size_t> keep;
      for (std::size_t r = 0; r < 30; ++r)
        if (r != i) keep.push_back(r);
      const Dataset sub = d.subset_rows(keep);
      const auto m = fit_model(sub, specs[k]);
      const Matrix xi = build_design(d.x.row(static_cast<Eigen::Index>(i)), specs[k]);
      const double pred = (xi * m.fit.coefficients)(0);
      CHECK(std::abs(shortcut(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) -
                     (d.y[static_cast<Eigen::Index>(i)] - pred)) < 1e-8);
    }
  }
}

TEST_CASE("JMA: leverage-one observation is reported") {
  Dataset d = linear_data(20, 2, 6);
  d.x(7, 1) = 1e9;  // forces h_77 to 1 for the full model
  d.x.col(1).setZero();
  d.x(7, 1) = 1.0;
  try {
    jma_fit(d, enumerate_nested(2));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("observation 7") != std::string::npos);
  }
}

TEST_CASE("MMA, JMA and LAE objectives do not exceed the best single candidate") {
  for (std::uint64_t seed = 10; seed < 25; ++seed) {
    const Dataset d = linear_data(60, 5, seed, 2.0);
    const auto specs = enumerate_nested(5);
    const auto bundle = fit_residual_bundle(d, specs);
    const auto k = static_cast<Eigen::Index>(specs.size());

    const auto mma = mma_fit(d, bundle);
    const auto jma = jma_fit(d, bundle);
    CHECK(mma.weights.values().sum() == doctest::Approx(1.0));
    for (Eigen::Index j = 0; j < k; ++j) {
      Vector e = Vector::Zero(k);
      e[j] = 1.0;
      CHECK(mallows_criterion(bundle, mma.weights.values()) <= mallows_criterion(bundle, e) + 1e-9);
      CHECK(jackknife_criterion(bundle, jma.weights.values()) <= jackknife_criterion(bundle, e) + 1e-9);
    }

    const Vector lambdas = default_lambda_sequence(d, 20);
    const auto lae = lae_fit(d, lambdas, 5, seed);
    const Matrix cv = lasso_cv_residuals(d, lambdas, kfold_split(d.n(), 5, seed));
    const double mixed = (cv * lae.weights.values()).squaredNorm();
    for (Eigen::Index j = 0; j < lambdas.size(); ++j) CHECK(mixed <= cv.col(j).squaredNorm() * (1 + 1e-9) + 1e-12);
  }
}

TEST_CASE("LASSO limits") {
  const Dataset d = linear_data(50, 4, 7);
  const Vector zero = lasso_fit(d, 0.0);
  CHECK((zero - ols_fit(d).coefficients).cwiseAbs().maxCoeff() < 1e-6);

  LassoSolver solver(d.x, d.y);
  const double top = solver.lambda_max();
  for (double scale : {1.0, 3.0}) {
    const Vector b = lasso_fit(d, scale * top);
    CHECK(b.tail(4).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(b[0] == doctest::Approx(d.y.mean()));
  }
  CHECK_THROWS_AS(lasso_fit(d, -1.0), Error);
}

TEST_CASE("LASSO: one standardized covariate follows the soft-threshold formula") {
  Dataset d = linear_data(40, 1, 8);
  const double mean = d.x.col(0).mean();
  const double sd = std::sqrt((d.x.col(0).array() - mean).square().sum() / 40.0);
  d.x.col(0) = (d.x.col(0).array() - mean) / sd;
  const Vector yc = d.y.array() - d.y.mean();
  const double xy = d.x.col(0).dot(yc);
  const double xx = d.x.col(0).squaredNorm();
  CHECK(LassoSolver(d.x, d.y).lambda_max() == doctest::Approx(2.0 * std::abs(xy)));
  for (double frac : {0.1, 0.5, 0.9}) {
    const double lambda = frac * 2.0 * std::abs(xy);
    const double s = std::copysign(std::max(std::abs(xy) - lambda / 2.0, 0.0), xy);
    CHECK(lasso_fit(d, lambda)[1] == doctest::Approx(s / xx).epsilon(1e-9));
  }

  // A response with x'y = 3 on a standardized column has lambda_max = 6.
  Vector y = 3.0 * d.x.col(0) / xx;
  Dataset e{y, d.x, d.names};
  CHECK(LassoSolver(e.x, e.y).lambda_max() == doctest::Approx(6.0));
}

TEST_CASE("LASSO: stationarity holds on collinear designs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Dataset d = linear_data(80, 6, 100 + seed);
    d.x.col(4) = d.x.col(0) + d.x.col(1);                    // exact linear dependence
    d.x.col(5) = d.x.col(2) + 1e-7 * d.x.col(3);             // near duplicate
    const Vector lambdas = default_lambda_sequence(d, 30);
    const auto path = lasso_path(d, lambdas);
    Matrix xs(d.x.rows(), d.x.cols());
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) xs.col(j) = (d.x.col(j).array() - path.means[j]) / path.scales[j];
    const Vector yc = d.y.array() - d.y.mean();
    for (Eigen::Index l = 0; l < lambdas.size(); ++l) {
      const Vector gamma = path.coefficients.row(l).tail(6).transpose().cwiseProduct(path.scales);
      const Vector grad = xs.transpose() * (yc - xs * gamma);
      const double half = lambdas[l] / 2.0;
      double gap = 0.0;
      for (Eigen::Index j = 0; j < 6; ++j)
        gap = std::max(gap, gamma[j] == 0.0 ? std::abs(grad[j]) - half : std::abs(grad[j] - std::copysign(half, gamma[j])));
      CHECK(gap < 1e-5);
    }
  }
}

TEST_CASE("lambda sequence") {
  const Dataset d = linear_data(50, 3, 9);
  const Vector two = default_lambda_sequence(d, 2);
  CHECK(two[0] == doctest::Approx(LassoSolver(d.x, d.y).lambda_max()));
  CHECK(two[1] == 1e-4);
  const Vector hundred = default_lambda_sequence(d, 100);
  CHECK(hundred.size() == 100);
  for (Eigen::Index i = 1; i < 100; ++i) CHECK(hundred[i] < hundred[i - 1]);
  const auto path = lasso_path(d, hundred);
  CHECK(path.coefficients.row(0).tail(3).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("LAE: degenerate lambda lists") {
  const Dataset d = linear_data(60, 3, 11);
  Vector one(1);
  one << 0.05;
  const auto single = lae_fit(d, one, 5, 1);
  CHECK(single.weights[0] == 1.0);
  Vector dup(3);
  dup << 0.05, 0.05, 0.05;
  const auto tripled = lae_fit(d, dup, 5, 1);
  CHECK((tripled.predict(d.x) - single.predict(d.x)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_THROWS_AS(lae_fit(d, one, 100, 1), Error);
}

TEST_CASE("LAE: strong signal puts its weight on the unpenalized fit") {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Dataset d = linear_data(100, 3, 1000 + seed, 0.1);
    Vector lambdas(2);
    lambdas << 0.0, LassoSolver(d.x, d.y).lambda_max();
    if (lae_fit(d, lambdas, 10, seed).weights[0] > 0.9) ++hits;
  }
  CHECK(hits > 95);
}

TEST_CASE("LAE: keyed folds make the fit invariant to row order") {
  const Dataset d = linear_data(60, 3, 12);
  std::vector<std::uint64_t> ids(60);
  std::vector<std::size_t> order(60);
  for (std::size_t i = 0; i < 60; ++i) {
    ids[i] = 1000 + i;
    order[i] = (i * 7) % 60;
  }
  std::vector<std::uint64_t> permuted_ids(60);
  for (std::size_t i = 0; i < 60; ++i) permuted_ids[i] = ids[order[i]];
  const Vector lambdas = default_lambda_sequence(d, 10);
  const auto a = lae_fit(d, lambdas, 5, 3, ids);
  const auto b = lae_fit(d.subset_rows(order), lambdas, 5, 3, permuted_ids);
  CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() < 1e-8);
}
