#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mavg/error.hpp"
#include "mavg/optimal.hpp"
#include "mavg/rng.hpp"

namespace mavg {

bool is_nested_sequence(const std::vector<ModelSpec>& specs) {
  if (specs.empty()) return false;
  for (std::size_t k = 1; k < specs.size(); ++k) {
    const auto& prev = specs[k - 1];
    const auto& cur = specs[k];
    if (cur.include_intercept != prev.include_intercept) return false;
    if (cur.covariates.size() != prev.covariates.size() + 1) return false;
    if (!std::equal(prev.covariates.begin(), prev.covariates.end(), cur.covariates.begin())) return false;
  }
  return true;
}

namespace {

std::size_t padded_position(const ModelSpec& spec, Eigen::Index design_column) {
  if (spec.include_intercept) {
    if (design_column == 0) return 0;
    return spec.covariates[static_cast<std::size_t>(design_column - 1)] + 1;
  }
  return spec.covariates[static_cast<std::size_t>(design_column)] + 1;
}

double full_model_sigma2(const Dataset& data, const ModelSpec& largest, double largest_sigma2) {
  if (largest.include_intercept && largest.covariates.size() == data.p()) return largest_sigma2;
  return fit_model(data, enumerate_nested(data.p()).back()).fit.sigma2;
}

ResidualBundle nested_bundle(const Dataset& data, const std::vector<ModelSpec>& specs) {
  const ModelSpec& largest = specs.back();
  const Matrix d = build_design(data.x, largest);
  const Eigen::Index n = d.rows();
  const Eigen::Index m = d.cols();
  const auto k = static_cast<Eigen::Index>(specs.size());

  // Modified Gram-Schmidt with one reorthogonalization pass; dependent columns get q = 0.
  Matrix q = Matrix::Zero(n, m);
  Matrix r = Matrix::Zero(m, m);
  std::vector<char> dependent(static_cast<std::size_t>(m), 0);
  for (Eigen::Index j = 0; j < m; ++j) {
    Vector v = d.col(j);
    const double norm0 = v.norm();
    if (j > 0) {
      for (int pass = 0; pass < 2; ++pass) {
        const Vector proj = q.leftCols(j).transpose() * v;
        v -= q.leftCols(j) * proj;
        r.col(j).head(j) += proj;
      }
    }
    const double nv = v.norm();
    if (!(norm0 > 0.0) || nv <= 1e-10 * norm0) {
      dependent[static_cast<std::size_t>(j)] = 1;
      r.col(j).head(j).setZero();
    } else {
      q.col(j) = v / nv;
      r(j, j) = nv;
    }
  }
  std::vector<Eigen::Index> independent;
  for (Eigen::Index j = 0; j < m; ++j)
    if (!dependent[static_cast<std::size_t>(j)]) independent.push_back(j);
  const auto rank_total = static_cast<Eigen::Index>(independent.size());
  Matrix r_ind(rank_total, rank_total);
  Vector z(rank_total);
  for (Eigen::Index a = 0; a < rank_total; ++a) {
    z[a] = q.col(independent[static_cast<std::size_t>(a)]).dot(data.y);
    for (Eigen::Index b = 0; b < rank_total; ++b)
      r_ind(a, b) = r(independent[static_cast<std::size_t>(a)], independent[static_cast<std::size_t>(b)]);
  }
  const Matrix r_inv = r_ind.triangularView<Eigen::Upper>().solve(Matrix::Identity(rank_total, rank_total));

  ResidualBundle out;
  const auto p1 = static_cast<Eigen::Index>(data.p() + 1);
  out.residuals.resize(n, k);
  out.hat_diag.resize(n, k);
  out.coefficients = Matrix::Zero(k, p1);
  out.variances = Matrix::Zero(k, p1);
  out.ranks.resize(static_cast<std::size_t>(k));

  Vector fitted = Vector::Zero(n);
  Vector hat = Vector::Zero(n);
  Eigen::Index consumed = 0;  // design columns already accumulated
  Eigen::Index rank = 0;
  double last_sigma2 = 0.0;
  for (Eigen::Index kk = 0; kk < k; ++kk) {
    const auto& spec = specs[static_cast<std::size_t>(kk)];
    const auto cols = static_cast<Eigen::Index>(spec.covariates.size()) + (spec.include_intercept ? 1 : 0);
    for (; consumed < cols; ++consumed) {
      if (dependent[static_cast<std::size_t>(consumed)]) continue;
      fitted += q.col(consumed) * z[rank];
      hat += q.col(consumed).cwiseAbs2();
      ++rank;
    }
    out.residuals.col(kk) = data.y - fitted;
    out.hat_diag.col(kk) = hat;
    out.ranks[static_cast<std::size_t>(kk)] = static_cast<std::size_t>(rank);
    const double rss = out.residuals.col(kk).squaredNorm();
    const double sigma2 = n > rank ? rss / static_cast<double>(n - rank) : 0.0;
    last_sigma2 = sigma2;
    if (rank > 0) {
      const Matrix block = r_inv.topLeftCorner(rank, rank);
      const Vector beta = block.triangularView<Eigen::Upper>() * z.head(rank);
      const Vector unscaled = block.rowwise().squaredNorm();
      for (Eigen::Index a = 0; a < rank; ++a) {
        const auto pos = static_cast<Eigen::Index>(padded_position(largest, independent[static_cast<std::size_t>(a)]));
        out.coefficients(kk, pos) = beta[a];
        out.variances(kk, pos) = sigma2 * unscaled[a];
      }
    }
  }
  out.sigma2_full = full_model_sigma2(data, largest, last_sigma2);
  return out;
}

ResidualBundle general_bundle(const Dataset& data, const std::vector<ModelSpec>& specs) {
  const auto models = fit_candidates(data, specs);
  ResidualBundle out;
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto k = static_cast<Eigen::Index>(models.size());
  out.residuals.resize(n, k);
  out.hat_diag.resize(n, k);
  out.ranks.resize(models.size());
  for (Eigen::Index kk = 0; kk < k; ++kk) {
    const auto& m = models[static_cast<std::size_t>(kk)];
    out.residuals.col(kk) = m.fit.residuals;
    out.hat_diag.col(kk) = m.fit.hat_diag;
    out.ranks[static_cast<std::size_t>(kk)] = m.fit.rank;
  }
  out.coefficients = padded_coefficients(models, data.p());
  out.variances = padded_variances(models, data.p());
  out.sigma2_full = fit_model(data, enumerate_nested(data.p()).back()).fit.sigma2;
  return out;
}

void check_full_model_estimable(const Dataset& data) {
  if (!(data.n() > data.p() + 1)) {
    std::ostringstream msg;
    msg << "full model not estimable: n = " << data.n() << " but p + 1 = " << data.p() + 1;
    throw Error(ErrorCode::kRefused, msg.str());
  }
}

}  // namespace

ResidualBundle fit_residual_bundle(const Dataset& data, const std::vector<ModelSpec>& specs) {
  data.validate();
  require(!specs.empty(), ErrorCode::kInvalidArgument, "candidate set is empty");
  return is_nested_sequence(specs) ? nested_bundle(data, specs) : general_bundle(data, specs);
}

double mallows_criterion(const ResidualBundle& bundle, const Vector& w) {
  const Vector e = bundle.residuals * w;
  double k_w = 0.0;
  for (std::size_t i = 0; i < bundle.ranks.size(); ++i)
    k_w += w[static_cast<Eigen::Index>(i)] * static_cast<double>(bundle.ranks[i]);
  return e.squaredNorm() + 2.0 * bundle.sigma2_full * k_w;
}

Matrix loo_residuals(const ResidualBundle& bundle) {
  Matrix out(bundle.residuals.rows(), bundle.residuals.cols());
  for (Eigen::Index k = 0; k < out.cols(); ++k) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double h = bundle.hat_diag(i, k);
      if (!(h < 1.0 - 1e-10)) {
        std::ostringstream msg;
        msg << "jackknife: observation " << i << " has leverage " << h << " in candidate " << k;
        throw Error(ErrorCode::kNumerical, msg.str());
      }
      out(i, k) = bundle.residuals(i, k) / (1.0 - h);
    }
  }
  return out;
}

double jackknife_criterion(const ResidualBundle& bundle, const Vector& w) {
  const Vector e = loo_residuals(bundle) * w;
  return e.squaredNorm() / static_cast<double>(e.size());
}

AveragedFit mma_fit(const Dataset& data, const ResidualBundle& bundle) {
  check_full_model_estimable(data);
  const Matrix& e = bundle.residuals;
  // 0.5 w'Qw + c'w equals half the Mallows criterion.
  const Matrix q = e.transpose() * e;
  Vector c(e.cols());
  for (Eigen::Index k = 0; k < e.cols(); ++k)
    c[k] = bundle.sigma2_full * static_cast<double>(bundle.ranks[static_cast<std::size_t>(k)]);
  const auto sol = solve_simplex_qp(q, c);
  return combine_padded(Method::kMma, bundle.coefficients, bundle.variances, sol.weights, data,
                        VarianceRule::kBuckland);
}

AveragedFit mma_fit(const Dataset& data, const std::vector<ModelSpec>& specs) {
  check_full_model_estimable(data);
  const auto& use = specs.empty() ? enumerate_nested(data.p()) : specs;
  return mma_fit(data, fit_residual_bundle(data, use));
}

AveragedFit jma_fit(const Dataset& data, const ResidualBundle& bundle) {
  const Matrix e = loo_residuals(bundle);
  const Matrix q = e.transpose() * e / static_cast<double>(e.rows());
  const auto sol = solve_simplex_qp(q, Vector::Zero(e.cols()));
  return combine_padded(Method::kJma, bundle.coefficients, bundle.variances, sol.weights, data,
                        VarianceRule::kBuckland);
}

AveragedFit jma_fit(const Dataset& data, const std::vector<ModelSpec>& specs) {
  const auto& use = specs.empty() ? enumerate_nested(data.p()) : specs;
  return jma_fit(data, fit_residual_bundle(data, use));
}

// ---------------------------------------------------------------------------
// LASSO

LassoSolver::LassoSolver(const Matrix& x, const Vector& y) {
  require(x.rows() == y.size(), ErrorCode::kDimensionMismatch, "lasso: X rows do not match y length");
  require(x.rows() >= 2, ErrorCode::kInvalidArgument, "lasso: need at least two observations");
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  means_ = x.colwise().mean();
  scales_.resize(p);
  usable_.assign(static_cast<std::size_t>(p), 0);
  Matrix xs(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const Vector centered = x.col(j).array() - means_[j];
    const double s = std::sqrt(centered.squaredNorm() / static_cast<double>(n));
    if (s > 1e-10 * (1.0 + std::abs(means_[j]))) {
      scales_[j] = s;
      xs.col(j) = centered / s;
      usable_[static_cast<std::size_t>(j)] = 1;
    } else {
      scales_[j] = 0.0;
      xs.col(j).setZero();
    }
  }
  y_mean_ = y.mean();
  const Vector yc = y.array() - y_mean_;
  gram_ = xs.transpose() * xs;
  cross_ = xs.transpose() * yc;
  gamma_ = Vector::Zero(p);
  grad_ = cross_;
  yy_ = yc.squaredNorm();
  kkt_tol_ = 1e-9 * static_cast<double>(n) * (1.0 + std::sqrt(yc.squaredNorm() / static_cast<double>(n)));
}

// Largest violation of the stationarity conditions at the current iterate.
double LassoSolver::kkt_gap(double half_lambda) const {
  double gap = 0.0;
  for (Eigen::Index j = 0; j < gamma_.size(); ++j) {
    if (!usable_[static_cast<std::size_t>(j)]) continue;
    if (gamma_[j] == 0.0)
      gap = std::max(gap, std::abs(grad_[j]) - half_lambda);
    else
      gap = std::max(gap, std::abs(grad_[j] - (gamma_[j] > 0.0 ? half_lambda : -half_lambda)));
  }
  return gap;
}

double LassoSolver::lambda_max() const {
  double best = 0.0;
  for (Eigen::Index j = 0; j < cross_.size(); ++j)
    if (usable_[static_cast<std::size_t>(j)]) best = std::max(best, std::abs(cross_[j]));
  return 2.0 * best;
}

// Gap between 0.5 ||r||^2 + h ||gamma||_1 and the dual value at the scaled
// residual. It bounds 0.5 ||X (gamma - gamma*)||^2, so it certifies the fit even
// where near-duplicate columns leave the coefficients themselves undetermined.
double LassoSolver::duality_gap(double half_lambda) const {
  const double gc = gamma_.dot(cross_);
  const double rr = std::max(yy_ - gc - gamma_.dot(grad_), 0.0);
  const double worst = grad_.size() ? grad_.cwiseAbs().maxCoeff() : 0.0;
  const double s = worst > half_lambda ? half_lambda / worst : 1.0;
  const double primal = 0.5 * rr + half_lambda * gamma_.lpNorm<1>();
  const double dual = s * (yy_ - gc) - 0.5 * s * s * rr;
  return primal - dual;
}

// Active-set iteration at fixed lambda, started from the coordinate-descent
// iterate. Each pass solves the stationarity system on the current sign
// pattern; a coordinate that would cross zero stops the step there and leaves
// the set, and the worst KKT violator outside the set joins it. A failed
// attempt is kept as the warm start only when it lowered the objective.
bool LassoSolver::polish(double half_lambda) {
  const Eigen::Index p = gamma_.size();
  Vector g = gamma_;
  Vector signs = Vector::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j)
    if (g[j] != 0.0) signs[j] = g[j] > 0.0 ? 1.0 : -1.0;
  const double slack = half_lambda + 1e-9 * std::max(1.0, half_lambda);
  const auto objective = [&](const Vector& v) {
    return 0.5 * v.dot(gram_ * v) - v.dot(cross_) + half_lambda * v.lpNorm<1>();
  };
  const auto keep_progress = [&] {
    if (objective(g) < objective(gamma_)) {
      gamma_ = g;
      grad_ = cross_ - gram_ * g;
    }
    return false;
  };

  for (int pass = 0; pass < 4 * static_cast<int>(p) + 20; ++pass) {
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < p; ++j)
      if (signs[j] != 0.0) active.push_back(j);
    Vector target = Vector::Zero(p);
    if (!active.empty()) {
      const auto a = static_cast<Eigen::Index>(active.size());
      Matrix ga(a, a);
      Vector rhs(a);
      for (Eigen::Index i = 0; i < a; ++i) {
        const auto ai = active[static_cast<std::size_t>(i)];
        rhs[i] = cross_[ai] - half_lambda * signs[ai];
        for (Eigen::Index j = 0; j < a; ++j) ga(i, j) = gram_(ai, active[static_cast<std::size_t>(j)]);
      }
      Eigen::LLT<Matrix> llt(ga);
      if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
        // Dependent active columns. A null direction leaves the fit unchanged
        // to second order; orient it downhill in the first-order change of the
        // smooth part plus the penalty, slide until a coordinate reaches zero
        // and drop that coordinate.
        Eigen::SelfAdjointEigenSolver<Matrix> eig(ga);
        if (eig.info() != Eigen::Success) return keep_progress();
        Vector v = eig.eigenvectors().col(0);
        const Vector grad_now = cross_ - gram_ * g;
        double slope = 0.0;  // derivative of the objective along -v
        for (Eigen::Index i = 0; i < a; ++i) {
          const auto ai = active[static_cast<std::size_t>(i)];
          slope += (grad_now[ai] - half_lambda * signs[ai]) * v[i];
        }
        if (slope > 0.0) v = -v;
        double step = std::numeric_limits<double>::infinity();
        Eigen::Index drop = -1;
        for (Eigen::Index i = 0; i < a; ++i) {
          const auto ai = active[static_cast<std::size_t>(i)];
          if (signs[ai] * v[i] > 0.0 && g[ai] / v[i] < step) {
            step = g[ai] / v[i];
            drop = ai;
          }
        }
        if (drop < 0) return keep_progress();
        for (Eigen::Index i = 0; i < a; ++i) g[active[static_cast<std::size_t>(i)]] -= step * v[i];
        g[drop] = 0.0;
        signs[drop] = 0.0;
        continue;
      }
      const Vector sol = llt.solve(rhs);
      if (!sol.allFinite()) return keep_progress();
      for (Eigen::Index i = 0; i < a; ++i) target[active[static_cast<std::size_t>(i)]] = sol[i];
    }

    // Longest step toward the target that keeps every active sign.
    double step = 1.0;
    Eigen::Index blocking = -1;
    for (auto j : active) {
      if (target[j] * signs[j] > 0.0) continue;
      const double t = g[j] / (g[j] - target[j]);
      if (t < step) {
        step = t;
        blocking = j;
      }
    }
    if (blocking >= 0) {
      g += step * (target - g);
      g[blocking] = 0.0;
      signs[blocking] = 0.0;
      for (auto j : active)
        if (g[j] * signs[j] <= 0.0) {
          g[j] = 0.0;
          signs[j] = 0.0;
        }
      continue;
    }
    g = target;

    const Vector grad = cross_ - gram_ * g;
    Eigen::Index worst = -1;
    double worst_excess = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!usable_[static_cast<std::size_t>(j)] || signs[j] != 0.0) continue;
      const double excess = std::abs(grad[j]) - slack;
      if (excess > worst_excess) {
        worst_excess = excess;
        worst = j;
      }
    }
    if (worst < 0) {
      gamma_ = g;
      grad_ = grad;
      return true;
    }
    signs[worst] = grad[worst] > 0.0 ? 1.0 : -1.0;
  }
  return keep_progress();
}

void LassoSolver::solve(double lambda) {
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::kInvalidArgument, "lasso: lambda must be >= 0");
  const double half = 0.5 * lambda;
  const Eigen::Index p = gamma_.size();
  constexpr long long kMaxSweeps = 1000000;
  for (long long sweep = 1; sweep <= kMaxSweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!usable_[static_cast<std::size_t>(j)]) continue;
      const double gjj = gram_(j, j);
      const double old = gamma_[j];
      const double z = grad_[j] + gjj * old;
      const double shrunk = z > half ? z - half : (z < -half ? z + half : 0.0);
      const double next = shrunk / gjj;
      const double delta = next - old;
      if (delta != 0.0) {
        gamma_[j] = next;
        grad_.noalias() -= gram_.col(j) * delta;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    ++sweeps_;
    if (max_change < 1e-9) return;
    if (sweep == 2 || sweep == 10 || sweep == 30 || sweep % 100 == 0) {
      // Collinear designs can leave coordinates drifting along a flat
      // direction long after the stationarity conditions hold.
      if (polish(half) || kkt_gap(half) < kkt_tol_ || duality_gap(half) <= 1e-12 * yy_) return;
    }
  }
  std::ostringstream msg;
  msg << "lasso: coordinate descent did not converge in " << kMaxSweeps << " sweeps (lambda = " << lambda << ")";
  throw Error(ErrorCode::kConvergence, msg.str());
}

Vector LassoSolver::original_scale() const {
  const Eigen::Index p = gamma_.size();
  Vector out(p + 1);
  double intercept = y_mean_;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double b = usable_[static_cast<std::size_t>(j)] ? gamma_[j] / scales_[j] : 0.0;
    out[j + 1] = b;
    intercept -= b * means_[j];
  }
  out[0] = intercept;
  return out;
}

LassoPath LassoSolver::path(const Vector& lambdas) {
  LassoPath out;
  out.lambdas = lambdas;
  out.means = means_;
  out.scales = scales_;
  out.coefficients.resize(lambdas.size(), gamma_.size() + 1);
  for (Eigen::Index l = 0; l < lambdas.size(); ++l) {
    solve(lambdas[l]);
    out.coefficients.row(l) = original_scale().transpose();
  }
  return out;
}

Vector LassoSolver::fit(double lambda) {
  gamma_.setZero();
  grad_ = cross_;
  solve(lambda);
  return original_scale();
}

Vector lasso_fit(const Dataset& data, double lambda) {
  data.validate();
  LassoSolver solver(data.x, data.y);
  return solver.fit(lambda);
}

LassoPath lasso_path(const Dataset& data, const Vector& lambdas) {
  data.validate();
  LassoSolver solver(data.x, data.y);
  return solver.path(lambdas);
}

Vector default_lambda_sequence(const Dataset& data, std::size_t length) {
  require(length >= 2, ErrorCode::kInvalidArgument, "lambda sequence: length must be at least 2");
  LassoSolver solver(data.x, data.y);
  const double top = solver.lambda_max();
  require(top > 0.0, ErrorCode::kInvalidArgument, "lambda sequence: every covariate is constant");
  constexpr double kMin = 1e-4;
  require(top > kMin, ErrorCode::kInvalidArgument, "lambda sequence: lambda_max does not exceed 1e-4");
  Vector out(static_cast<Eigen::Index>(length));
  const double lo = std::log(kMin);
  const double hi = std::log(top);
  for (std::size_t i = 0; i < length; ++i)
    out[static_cast<Eigen::Index>(i)] = std::exp(hi + (lo - hi) * static_cast<double>(i) / static_cast<double>(length - 1));
  out[0] = top;
  out[static_cast<Eigen::Index>(length - 1)] = kMin;
  return out;
}

Matrix lasso_cv_residuals(const Dataset& data, const Vector& lambdas, const std::vector<std::size_t>& folds) {
  require(folds.size() == data.n(), ErrorCode::kDimensionMismatch, "lasso cv: fold vector length mismatch");
  const std::size_t k = *std::max_element(folds.begin(), folds.end()) + 1;
  Matrix e(static_cast<Eigen::Index>(data.n()), lambdas.size());
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? test : train).push_back(i);
    if (test.empty()) continue;
    const Dataset tr = data.subset_rows(train);
    LassoSolver solver(tr.x, tr.y);
    const LassoPath path = solver.path(lambdas);
    for (std::size_t i : test) {
      const auto row = static_cast<Eigen::Index>(i);
      const Vector pred = path.coefficients.rightCols(data.x.cols()) * data.x.row(row).transpose() +
                          path.coefficients.col(0);
      e.row(row) = (data.y[row] - pred.array()).matrix().transpose();
    }
  }
  return e;
}

AveragedFit lae_fit(const Dataset& data, const Vector& lambdas, std::size_t folds, std::uint64_t seed,
                    std::span<const std::uint64_t> ids) {
  data.validate();
  require(lambdas.size() > 0, ErrorCode::kInvalidArgument, "lae: empty lambda sequence");
  require(folds >= 2, ErrorCode::kInvalidArgument, "lae: need at least two folds");
  if (folds > data.n()) {
    std::ostringstream msg;
    msg << "lae: " << folds << " folds exceed n = " << data.n();
    throw Error(ErrorCode::kInvalidArgument, msg.str());
  }
  require(ids.empty() || ids.size() == data.n(), ErrorCode::kDimensionMismatch, "lae: id count mismatch");
  const auto assignment = ids.empty() ? kfold_split(data.n(), folds, seed) : kfold_split_keyed(ids, folds, seed);
  const Matrix e = lasso_cv_residuals(data, lambdas, assignment);
  const Matrix q = e.transpose() * e / static_cast<double>(e.rows());
  const auto sol = solve_simplex_qp(q, Vector::Zero(e.cols()));

  LassoSolver solver(data.x, data.y);
  const LassoPath path = solver.path(lambdas);

  AveragedFit out;
  out.method = Method::kLae;
  out.weights = sol.weights;
  out.coefficients = path.coefficients.transpose() * sol.weights.values();
  const auto cols = out.coefficients.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.std_errors = Vector::Constant(cols, nan);
  out.ci_lower = Vector::Constant(cols, nan);
  out.ci_upper = Vector::Constant(cols, nan);
  out.names.push_back("(Intercept)");
  out.names.insert(out.names.end(), data.names.begin(), data.names.end());
  return out;
}

}  // namespace mavg
