#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mavg/averaging.hpp"
#include "mavg/model_set.hpp"
#include "mavg/numeric.hpp"

namespace mavg {

/// Per-candidate least-squares output needed by the Mallows and jackknife criteria.
struct ResidualBundle {
  Matrix residuals;                 // n x k, column k = y - yhat_k
  Matrix hat_diag;                  // n x k, leverages of candidate k
  std::vector<std::size_t> ranks;   // effective parameter count of each candidate
  Matrix coefficients;              // k x (p+1), padded onto the full covariate layout
  Matrix variances;                 // k x (p+1), sigma2_k [(X_k'X_k)^-1]_jj
  double sigma2_full = 0.0;         // rss / (n - rank) of the model with every covariate
};

/// True when each spec extends the previous one by exactly one appended covariate.
bool is_nested_sequence(const std::vector<ModelSpec>& specs);

/// Fits every candidate. Nested sequences share one orthogonalization of the
/// largest design; other sets are fitted one by one.
ResidualBundle fit_residual_bundle(const Dataset& data, const std::vector<ModelSpec>& specs);

/// Mallows criterion (y - X b_w)'(y - X b_w) + 2 sigma^2 tr(P_w).
double mallows_criterion(const ResidualBundle& bundle, const Vector& w);
/// Leave-one-out residuals D_k e_k for every candidate; throws on leverage-one observations.
Matrix loo_residuals(const ResidualBundle& bundle);
/// n^-1 times the squared norm of the weighted leave-one-out residual.
double jackknife_criterion(const ResidualBundle& bundle, const Vector& w);

/// Mallows model averaging. Specs default to the nested sequence when empty.
AveragedFit mma_fit(const Dataset& data, const std::vector<ModelSpec>& specs = {});
AveragedFit mma_fit(const Dataset& data, const ResidualBundle& bundle);
/// Jackknife model averaging. Specs default to the nested sequence when empty.
AveragedFit jma_fit(const Dataset& data, const std::vector<ModelSpec>& specs = {});
AveragedFit jma_fit(const Dataset& data, const ResidualBundle& bundle);

/// LASSO solutions along a sequence of penalties, coefficients on the original scale.
struct LassoPath {
  Vector lambdas;
  Matrix coefficients;  // L x (p+1): intercept, then slopes
  Vector means;         // column means used for standardization
  Vector scales;        // column standard deviations (divisor n); 0 marks a constant column
};

/// Coordinate-descent LASSO for sum_i (y_i - b0 - x_i b)^2 + lambda sum_j |b_j| on standardized
/// columns. Penalties are visited in the given order with warm starts.
class LassoSolver {
 public:
  LassoSolver(const Matrix& x, const Vector& y);

  LassoPath path(const Vector& lambdas);
  Vector fit(double lambda);
  /// Smallest penalty at which every slope is zero.
  double lambda_max() const;
  long long sweeps() const { return sweeps_; }

 private:
  void solve(double lambda);
  bool polish(double half_lambda);
  double kkt_gap(double half_lambda) const;
  double duality_gap(double half_lambda) const;
  Vector original_scale() const;

  Vector means_;
  Vector scales_;
  double y_mean_ = 0.0;
  Matrix gram_;     // standardized Gram matrix
  Vector cross_;    // standardized X' (y - ybar)
  Vector gamma_;    // standardized coefficients (current warm start)
  Vector grad_;     // cross_ - gram_ * gamma_
  std::vector<char> usable_;
  double kkt_tol_ = 0.0;
  double yy_ = 0.0;       // ||y - ybar||^2
  long long sweeps_ = 0;
};

Vector lasso_fit(const Dataset& data, double lambda);
LassoPath lasso_path(const Dataset& data, const Vector& lambdas);

/// lambda_max, then log-equally spaced values down to 1e-4.
Vector default_lambda_sequence(const Dataset& data, std::size_t length = 100);

/// Out-of-fold residuals of every penalty value (n x L).
Matrix lasso_cv_residuals(const Dataset& data, const Vector& lambdas, const std::vector<std::size_t>& folds);

/// LASSO averaging with weights minimizing the k-fold cross-validation error.
/// When `ids` is given, folds are keyed by id instead of row position.
AveragedFit lae_fit(const Dataset& data, const Vector& lambdas, std::size_t folds, std::uint64_t seed,
                    std::span<const std::uint64_t> ids = {});

}  // namespace mavg
