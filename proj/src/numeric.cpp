#include "mavg/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "mavg/error.hpp"

namespace mavg {

namespace {

constexpr double kSimplexSumTol = 1e-10;

bool all_finite(const Matrix& m) { return m.allFinite(); }

std::vector<Eigen::Index> indices_where(const Vector& v, double threshold) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] > threshold) out.push_back(i);
  return out;
}

}  // namespace

SimplexWeights::SimplexWeights(Vector values) : values_(std::move(values)) {
  require(values_.size() > 0, ErrorCode::kInvalidArgument, "simplex weights: empty vector");
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    require(std::isfinite(values_[i]) && values_[i] >= -1e-15 && values_[i] <= 1.0 + 1e-15,
            ErrorCode::kNumerical, "simplex weights: entry outside [0,1]");
    values_[i] = std::clamp(values_[i], 0.0, 1.0);
  }
  require(std::abs(values_.sum() - 1.0) <= kSimplexSumTol, ErrorCode::kNumerical,
          "simplex weights: entries do not sum to 1");
}

SimplexWeights SimplexWeights::uniform(std::size_t k) {
  require(k > 0, ErrorCode::kInvalidArgument, "simplex weights: empty vector");
  return SimplexWeights(Vector::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k)));
}

SimplexWeights SimplexWeights::unit(std::size_t k, std::size_t index) {
  require(index < k, ErrorCode::kInvalidArgument, "simplex weights: unit index out of range");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(k));
  v[static_cast<Eigen::Index>(index)] = 1.0;
  return SimplexWeights(std::move(v));
}

LsqFit solve_least_squares(const Matrix& x, const Vector& y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  require(n >= 1, ErrorCode::kInvalidArgument, "least squares: empty input");
  require(y.size() == n, ErrorCode::kDimensionMismatch, "least squares: X rows do not match y length");
  require(all_finite(x) && y.allFinite(), ErrorCode::kNumerical, "least squares: non-finite input");

  LsqFit fit;
  if (p == 0) {
    fit.coefficients = Vector(0);
    fit.residuals = y;
    fit.hat_diag = Vector::Zero(n);
    fit.unscaled_cov_diag = Vector(0);
    fit.rss = y.squaredNorm();
    fit.rank = 0;
    fit.sigma2 = fit.rss / static_cast<double>(n);
    return fit;
  }

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(1e-10);
  cod.compute(x);
  const Eigen::Index r = cod.rank();

  fit.coefficients = cod.solve(y);
  fit.residuals = y - x * fit.coefficients;
  fit.rss = fit.residuals.squaredNorm();
  fit.rank = static_cast<std::size_t>(r);
  fit.sigma2 = n > r ? fit.rss / static_cast<double>(n - r) : 0.0;

  if (r > 0) {
    Matrix q = cod.householderQ() * Matrix::Identity(n, r);
    fit.hat_diag = q.rowwise().squaredNorm();
  } else {
    fit.hat_diag = Vector::Zero(n);
  }
  if (r == p) {
    // (X'X)^{-1} = P R^{-1} R^{-T} P'
    Matrix r_inv = cod.matrixT().topLeftCorner(r, r).triangularView<Eigen::Upper>().solve(
        Matrix::Identity(r, r));
    Vector d = r_inv.rowwise().squaredNorm();
    fit.unscaled_cov_diag = cod.colsPermutation() * d;
  } else {
    Matrix pinv = cod.pseudoInverse();
    fit.unscaled_cov_diag = pinv.rowwise().squaredNorm();
  }
  return fit;
}

SimplexWeights project_to_simplex(const Vector& v) {
  require(v.size() > 0, ErrorCode::kInvalidArgument, "project_to_simplex: empty vector");
  require(v.allFinite(), ErrorCode::kNumerical, "project_to_simplex: non-finite input");
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  Vector w = (v.array() - theta).max(0.0).matrix();
  const double s = w.sum();
  w /= s;
  return SimplexWeights(std::move(w));
}

// Wichura, Algorithm AS 241 (PPND16).
double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, ErrorCode::kInvalidArgument, "normal_quantile: probability outside (0,1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                 1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
              4.6303378461565452959) * r + 1.42343711074968357734) /
            (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                 0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
              2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                 0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
              5.4637849111641143699) * r + 6.6579046435011037772) /
            (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                 7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
              0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double largest_eigenvalue(const Matrix& symmetric, int iterations) {
  const Eigen::Index k = symmetric.rows();
  if (k == 0) return 0.0;
  // Deterministic start that is not orthogonal to the leading eigenvector of a PSD matrix.
  Vector v = Vector::Constant(k, 1.0);
  for (Eigen::Index i = 0; i < k; ++i) v[i] += 1e-3 * static_cast<double>(i % 7);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vector w = symmetric * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / norm;
    if (it > 5 && std::abs(next - lambda) <= 1e-12 * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

double simplex_qp_objective(const Matrix& q, const Vector& c, const Vector& w) {
  return 0.5 * w.dot(q * w) + c.dot(w);
}

double simplex_kkt_violation(const Matrix& q, const Vector& c, const Vector& w, double active_threshold) {
  const double scale = std::max({q.diagonal().cwiseAbs().maxCoeff(), c.size() ? c.cwiseAbs().maxCoeff() : 0.0,
                                 std::numeric_limits<double>::min()});
  const Vector g = (0.5 * (q + q.transpose()) * w + c) / scale;
  double weight_sum = 0.0;
  double g_star = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] > active_threshold) {
      g_star += w[i] * g[i];
      weight_sum += w[i];
    }
  }
  if (weight_sum == 0.0) return std::numeric_limits<double>::infinity();
  g_star /= weight_sum;
  double violation = std::abs(w.sum() - 1.0);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    violation = std::max(violation, -w[i]);
    if (w[i] > active_threshold)
      violation = std::max(violation, std::abs(g[i] - g_star));
    else
      violation = std::max(violation, g_star - g[i]);
  }
  return violation;
}

namespace {

// Minimizes 0.5 x'Qx + c'x subject to sum(x) = 1 on the index set `support`.
bool solve_equality_qp(const Matrix& q, const Vector& c, const std::vector<Eigen::Index>& support, Vector& z) {
  const auto m = static_cast<Eigen::Index>(support.size());
  Matrix qs(m, m);
  Vector cs(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    cs[a] = c[support[a]];
    for (Eigen::Index b = 0; b < m; ++b) qs(a, b) = q(support[a], support[b]);
  }
  // Bordered KKT system [Qs 1; 1' 0] [z; nu] = [-cs; 1]. Near-singular Qs (only
  // the ridge keeps it definite) loses digits, so refine the solve twice.
  Matrix kkt = Matrix::Zero(m + 1, m + 1);
  kkt.topLeftCorner(m, m) = qs;
  kkt.col(m).head(m).setOnes();
  kkt.row(m).head(m).setOnes();
  Vector rhs(m + 1);
  rhs << -cs, 1.0;
  const Eigen::FullPivLU<Matrix> lu(kkt);
  if (!lu.isInvertible()) return false;
  Vector sol = lu.solve(rhs);
  for (int pass = 0; pass < 2; ++pass) sol += lu.solve(rhs - kkt * sol);
  z = sol.head(m);
  return z.allFinite();
}

// Primal active-set method started from a feasible point. Returns the improved point.
Vector active_set_polish(const Matrix& q, const Vector& c, Vector x) {
  const Eigen::Index k = q.rows();
  for (Eigen::Index i = 0; i < k; ++i)
    if (x[i] < 1e-14) x[i] = 0.0;
  x /= x.sum();
  std::vector<Eigen::Index> support = indices_where(x, 0.0);
  const int cap = static_cast<int>(50 * k + 100);
  for (int iter = 0; iter < cap; ++iter) {
    Vector z;
    if (!solve_equality_qp(q, c, support, z)) break;
    const double z_min = z.minCoeff();
    if (z_min >= 0.0) {
      x.setZero();
      for (std::size_t a = 0; a < support.size(); ++a) x[support[a]] = z[static_cast<Eigen::Index>(a)];
      const Vector g = q * x + c;
      double g_star = 0.0;
      for (auto i : support) g_star += x[i] * g[i];
      Eigen::Index entering = -1;
      double most_negative = -1e-13;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (x[i] > 0.0 || std::find(support.begin(), support.end(), i) != support.end()) continue;
        const double reduced = g[i] - g_star;
        if (reduced < most_negative) {
          most_negative = reduced;
          entering = i;
        }
      }
      if (entering < 0) break;
      support.push_back(entering);
      std::sort(support.begin(), support.end());
      continue;
    }
    // Step toward z until the first support coordinate hits zero.
    double alpha = 1.0;
    for (std::size_t a = 0; a < support.size(); ++a) {
      const double xi = x[support[a]];
      const double zi = z[static_cast<Eigen::Index>(a)];
      if (zi < 0.0) alpha = std::min(alpha, xi / (xi - zi));
    }
    std::vector<Eigen::Index> kept;
    for (std::size_t a = 0; a < support.size(); ++a) {
      const Eigen::Index i = support[a];
      x[i] += alpha * (z[static_cast<Eigen::Index>(a)] - x[i]);
      if (x[i] <= 1e-15) {
        x[i] = 0.0;
      } else {
        kept.push_back(i);
      }
    }
    if (kept.empty()) break;
    support = std::move(kept);
    x /= x.sum();
  }
  return x;
}

}  // namespace

QpSolution solve_simplex_qp(const Matrix& q_in, const Vector& c_in, const QpOptions& options,
                            const std::optional<Vector>& warm_start) {
  require(q_in.rows() == q_in.cols(), ErrorCode::kDimensionMismatch, "simplex QP: Q is not square");
  require(c_in.size() == q_in.rows(), ErrorCode::kDimensionMismatch, "simplex QP: c length does not match Q");
  require(q_in.rows() > 0, ErrorCode::kInvalidArgument, "simplex QP: empty problem");
  require(all_finite(q_in) && c_in.allFinite(), ErrorCode::kNumerical, "simplex QP: non-finite input");
  const Eigen::Index k = q_in.rows();

  const Matrix q_sym = 0.5 * (q_in + q_in.transpose());
  if (k == 1) return {SimplexWeights::unit(1, 0), simplex_qp_objective(q_sym, c_in, Vector::Ones(1)), 0};

  const double scale = std::max(q_sym.diagonal().cwiseAbs().maxCoeff(), c_in.cwiseAbs().maxCoeff());
  if (scale == 0.0) {
    auto w = SimplexWeights::uniform(static_cast<std::size_t>(k));
    return {w, 0.0, 0};
  }
  Matrix q = q_sym / scale;
  const Vector c = c_in / scale;
  const double trace = q.trace();
  q.diagonal().array() += options.ridge_factor * (trace > 0.0 ? trace / static_cast<double>(k) : 1.0);

  double lipschitz = 1.05 * largest_eigenvalue(q);
  if (!(lipschitz > 0.0)) lipschitz = 1.0;

  auto objective = [&](const Vector& w) { return simplex_qp_objective(q, c, w); };

  Vector x = warm_start ? project_to_simplex(*warm_start).values()
                        : SimplexWeights::uniform(static_cast<std::size_t>(k)).values();
  Vector y = x;
  double t = 1.0;
  double f_prev = objective(x);
  int stalled = 0;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Vector grad = q * y + c;
    Vector x_new = project_to_simplex(y - grad / lipschitz).values();
    const double f_new = objective(x_new);
    if (f_new > f_prev) {
      // function-value restart: drop momentum and retake the step from x
      if (t == 1.0) {
        // a plain projected-gradient step from x did not descend; x is stationary to rounding
        stalled = options.stall_iterations;
        break;
      }
      y = x;
      t = 1.0;
      continue;
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_new + ((t - 1.0) / t_new) * (x_new - x);
    x = std::move(x_new);
    t = t_new;
    const double decrease = f_prev - f_new;
    f_prev = f_new;
    stalled = decrease < options.objective_tol ? stalled + 1 : 0;
    if (stalled >= options.stall_iterations) break;
  }
  if (stalled < options.stall_iterations) {
    std::ostringstream msg;
    msg << "simplex QP: no convergence after " << options.max_iterations << " iterations";
    throw Error(ErrorCode::kConvergence, msg.str());
  }

  Vector polished = active_set_polish(q, c, x);
  if (objective(polished) <= objective(x) + 1e-15 * std::max(1.0, std::abs(objective(x)))) x = polished;

  // Certificate on the rescaled, ridged problem.
  const double violation = simplex_kkt_violation(q, c, x);
  if (!(violation <= options.kkt_tol)) {
    std::ostringstream msg;
    msg << "simplex QP: KKT certificate failed (violation " << violation << ")";
    throw Error(ErrorCode::kConvergence, msg.str());
  }
  x = x.cwiseMax(0.0);
  x /= x.sum();
  SimplexWeights w(std::move(x));
  return {w, simplex_qp_objective(q_sym, c_in, w.values()), iter};
}

Vector solve_nnls(const Matrix& a, const Vector& b) {
  require(a.rows() == b.size(), ErrorCode::kDimensionMismatch, "nnls: A rows do not match b length");
  require(all_finite(a) && b.allFinite(), ErrorCode::kNumerical, "nnls: non-finite input");
  const Eigen::Index m = a.cols();
  Vector x = Vector::Zero(m);
  if (m == 0) return x;

  std::vector<char> passive(static_cast<std::size_t>(m), 0);
  std::vector<char> blocked(static_cast<std::size_t>(m), 0);
  const double tol = 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff() * b.cwiseAbs().maxCoeff() *
                                               static_cast<double>(std::max(a.rows(), m)));
  auto in_p = [&](Eigen::Index j) { return passive[static_cast<std::size_t>(j)] != 0; };

  auto solve_passive = [&]() {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < m; ++j)
      if (in_p(j)) cols.push_back(j);
    Matrix ap(a.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) ap.col(static_cast<Eigen::Index>(j)) = a.col(cols[j]);
    const Vector sp = ap.colPivHouseholderQr().solve(b);
    Vector s = Vector::Zero(m);
    for (std::size_t j = 0; j < cols.size(); ++j) s[cols[j]] = sp[static_cast<Eigen::Index>(j)];
    return s;
  };

  Vector w = a.transpose() * (b - a * x);
  const int max_outer = static_cast<int>(3 * m + 30);
  for (int outer = 0; outer < max_outer; ++outer) {
    Eigen::Index entering = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!in_p(j) && !blocked[static_cast<std::size_t>(j)] && w[j] > best) {
        best = w[j];
        entering = j;
      }
    }
    if (entering < 0) break;
    passive[static_cast<std::size_t>(entering)] = 1;

    Vector s = solve_passive();
    if (s[entering] <= 0.0) {
      // rounding: the column cannot enter although its gradient says so
      passive[static_cast<std::size_t>(entering)] = 0;
      blocked[static_cast<std::size_t>(entering)] = 1;
      continue;
    }
    std::fill(blocked.begin(), blocked.end(), 0);
    for (int inner = 0; inner <= m; ++inner) {
      bool feasible = true;
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (in_p(j) && s[j] <= 0.0) {
          feasible = false;
          alpha = std::min(alpha, x[j] / (x[j] - s[j]));
        }
      }
      if (feasible) break;
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < m; ++j) {
        if (in_p(j) && x[j] <= tol) {
          passive[static_cast<std::size_t>(j)] = 0;
          x[j] = 0.0;
        }
      }
      s = solve_passive();
    }
    for (Eigen::Index j = 0; j < m; ++j) x[j] = in_p(j) ? std::max(s[j], 0.0) : 0.0;
    w = a.transpose() * (b - a * x);
  }
  return x;
}

}  // namespace mavg
