#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>

namespace mavg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Least-squares fit of y on the columns of a design matrix.
struct LsqFit {
  Vector coefficients;       // one per design column, minimum-norm when rank deficient
  Vector residuals;          // y - X b
  Vector hat_diag;           // leverages P_ii
  Vector unscaled_cov_diag;  // diag of (X'X)^+; multiply by sigma2 for coefficient variances
  double rss = 0.0;
  double sigma2 = 0.0;       // rss / (n - rank), 0 when saturated
  std::size_t rank = 0;
};

/// A weight vector on the unit simplex. Construction validates the invariant.
class SimplexWeights {
 public:
  SimplexWeights() = default;
  explicit SimplexWeights(Vector values);

  static SimplexWeights uniform(std::size_t k);
  static SimplexWeights unit(std::size_t k, std::size_t index);

  const Vector& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

 private:
  Vector values_;
};

LsqFit solve_least_squares(const Matrix& x, const Vector& y);

SimplexWeights project_to_simplex(const Vector& v);

struct QpOptions {
  double ridge_factor = 1e-10;      // ridge = factor * trace(Q)/k on the rescaled problem
  double objective_tol = 1e-10;     // per-iteration decrease threshold on the rescaled problem
  int stall_iterations = 10;
  int max_iterations = 100000;
  double kkt_tol = 1e-6;
};

struct QpSolution {
  SimplexWeights weights;
  double objective = 0.0;  // 0.5 w'Qw + c'w on the caller's (unscaled, unridged) problem
  int iterations = 0;
};

/// Minimizes 0.5 w'Qw + c'w over the unit simplex.
///
/// Accelerated projected gradient with function-value restart, followed by a
/// primal active-set pass on the support the gradient phase identified. The
/// problem is rescaled so that max(|diag Q|, |c|) = 1 before solving; the KKT
/// certificate is checked on that scale and failure throws.
QpSolution solve_simplex_qp(const Matrix& q, const Vector& c, const QpOptions& options = {},
                            const std::optional<Vector>& warm_start = std::nullopt);

/// Largest KKT violation of w for the simplex QP (q, c), relative to the
/// problem scale max(|diag Q|, |c|).
double simplex_kkt_violation(const Matrix& q, const Vector& c, const Vector& w,
                             double active_threshold = 1e-8);

double simplex_qp_objective(const Matrix& q, const Vector& c, const Vector& w);

/// Lawson-Hanson active-set solver for min ||Ax - b||^2 subject to x >= 0.
Vector solve_nnls(const Matrix& a, const Vector& b);

/// Standard normal quantile (Wichura AS241, relative error about 1e-16).
double normal_quantile(double p);
double normal_cdf(double x);

double largest_eigenvalue(const Matrix& symmetric, int iterations = 200);

}  // namespace mavg
