#include "mavg/model_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "mavg/error.hpp"

namespace mavg {

void Dataset::validate() const {
  require(x.rows() == y.size(), ErrorCode::kDimensionMismatch, "dataset: covariate rows do not match response length");
  require(names.size() == p(), ErrorCode::kDimensionMismatch, "dataset: name count does not match column count");
  std::set<std::string> unique(names.begin(), names.end());
  require(unique.size() == names.size(), ErrorCode::kInvalidArgument, "dataset: column names are not unique");
  require(y.allFinite() && x.allFinite(), ErrorCode::kNumerical, "dataset: non-finite values");
}

Dataset Dataset::subset_rows(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.names = names;
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    out.y[static_cast<Eigen::Index>(i)] = y[r];
    out.x.row(static_cast<Eigen::Index>(i)) = x.row(r);
  }
  return out;
}

std::vector<std::string> default_names(std::size_t p) {
  std::vector<std::string> names;
  names.reserve(p);
  for (std::size_t j = 0; j < p; ++j) names.push_back("X" + std::to_string(j + 1));
  return names;
}

Matrix build_design(const Matrix& x, const ModelSpec& spec) {
  const Eigen::Index offset = spec.include_intercept ? 1 : 0;
  Matrix design(x.rows(), offset + static_cast<Eigen::Index>(spec.covariates.size()));
  if (spec.include_intercept) design.col(0).setOnes();
  for (std::size_t j = 0; j < spec.covariates.size(); ++j) {
    require(spec.covariates[j] < static_cast<std::size_t>(x.cols()), ErrorCode::kInvalidArgument,
            "model spec: covariate index out of bounds");
    design.col(offset + static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(spec.covariates[j]));
  }
  return design;
}

std::vector<ModelSpec> enumerate_nested(std::size_t p, bool include_intercept) {
  require(p > 0 || include_intercept, ErrorCode::kInvalidArgument,
          "enumerate_nested: no covariates and no intercept");
  std::vector<ModelSpec> specs;
  specs.reserve(p + 1);
  ModelSpec current{{}, include_intercept};
  if (include_intercept) specs.push_back(current);
  for (std::size_t j = 0; j < p; ++j) {
    current.covariates.push_back(j);
    specs.push_back(current);
  }
  return specs;
}

std::vector<ModelSpec> enumerate_all_subsets(std::size_t p, std::size_t cap) {
  if (p > cap) {
    std::ostringstream msg;
    msg << "enumerate_all_subsets: " << p << " covariates exceed the cap of " << cap
        << " (2^" << p << " candidate models)";
    throw Error(ErrorCode::kRefused, msg.str());
  }
  const std::size_t count = std::size_t{1} << p;
  std::vector<ModelSpec> specs(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    for (std::size_t j = 0; j < p; ++j)
      if (mask & (std::size_t{1} << j)) specs[mask].covariates.push_back(j);
  }
  return specs;
}

double gaussian_loglik(double rss, std::size_t n, bool* floored) {
  const double nn = static_cast<double>(n);
  double variance = rss / nn;
  const bool hit_floor = !(variance > 1e-300);
  if (hit_floor) variance = 1e-300;
  if (floored) *floored = hit_floor;
  return -0.5 * nn * (std::log(2.0 * std::numbers::pi * variance) + 1.0);
}

double FittedModel::coefficient_variance(std::size_t design_column) const {
  return fit.sigma2 * fit.unscaled_cov_diag[static_cast<Eigen::Index>(design_column)];
}

FittedModel fit_model(const Dataset& data, const ModelSpec& spec) {
  FittedModel m;
  m.spec = spec;
  m.fit = solve_least_squares(build_design(data.x, spec), data.y);
  const std::size_t n = data.n();
  m.loglik = gaussian_loglik(m.fit.rss, n, &m.variance_floored);
  m.n_params = m.fit.rank + 1;
  const double k = static_cast<double>(m.n_params);
  m.aic = -2.0 * m.loglik + 2.0 * k;
  m.bic = -2.0 * m.loglik + k * std::log(static_cast<double>(n));
  return m;
}

std::vector<FittedModel> fit_candidates(const Dataset& data, const std::vector<ModelSpec>& specs) {
  data.validate();
  std::vector<FittedModel> out;
  out.reserve(specs.size());
  for (const auto& spec : specs) out.push_back(fit_model(data, spec));
  return out;
}

namespace {

// Residual sum of squares bookkeeping on the centered Gram matrix of an
// intercept model: every candidate move is priced from the current inverse.
class GramStepper {
 public:
  explicit GramStepper(const Dataset& data) : n_(static_cast<double>(data.n())) {
    const Vector means = data.x.colwise().mean();
    const Matrix xc = data.x.rowwise() - means.transpose();
    const Vector yc = data.y.array() - data.y.mean();
    gram_ = xc.transpose() * xc;
    cross_ = xc.transpose() * yc;
    yy_ = yc.squaredNorm();
  }

  std::size_t p() const { return static_cast<std::size_t>(gram_.rows()); }

  double aic(double rss, std::size_t k) const {
    return n_ * std::log(std::max(rss, 1e-300 * n_) / n_) + 2.0 * (static_cast<double>(k) + 2.0);
  }

  // Columns of the full model that are linearly independent of earlier ones.
  std::vector<std::size_t> independent_columns() const {
    std::vector<std::size_t> s;
    for (std::size_t j = 0; j < p(); ++j) {
      const double gjj = gram_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
      if (!(gjj > 0.0)) continue;
      if (s.empty() || residual_variance(s, j) > 1e-10 * gjj) s.push_back(j);
    }
    return s;
  }

  struct State {
    Matrix inverse;
    Vector beta;
    double rss = 0.0;
  };

  State state(const std::vector<std::size_t>& s) const {
    State st;
    const auto k = static_cast<Eigen::Index>(s.size());
    if (k == 0) {
      st.rss = yy_;
      return st;
    }
    const Matrix gs = sub(s, s);
    Eigen::LLT<Matrix> llt(gs);
    st.inverse = llt.solve(Matrix::Identity(k, k));
    st.beta = st.inverse * subvec(s);
    st.rss = std::max(yy_ - subvec(s).dot(st.beta), 0.0);
    return st;
  }

  double rss_after_drop(const State& st, std::size_t pos) const {
    const auto i = static_cast<Eigen::Index>(pos);
    return st.rss + st.beta[i] * st.beta[i] / st.inverse(i, i);
  }

  // Returns negative when the column is collinear with the current set.
  double rss_after_add(const std::vector<std::size_t>& s, const State& st, std::size_t j) const {
    const auto jj = static_cast<Eigen::Index>(j);
    const double gjj = gram_(jj, jj);
    if (!(gjj > 0.0)) return -1.0;
    if (s.empty()) return st.rss - cross_[jj] * cross_[jj] / gjj;
    Vector gsj(static_cast<Eigen::Index>(s.size()));
    for (std::size_t a = 0; a < s.size(); ++a) gsj[static_cast<Eigen::Index>(a)] = gram_(static_cast<Eigen::Index>(s[a]), jj);
    const double q = gjj - gsj.dot(st.inverse * gsj);
    if (!(q > 1e-10 * gjj)) return -1.0;
    const double num = cross_[jj] - gsj.dot(st.beta);
    return std::max(st.rss - num * num / q, 0.0);
  }

 private:
  double residual_variance(const std::vector<std::size_t>& s, std::size_t j) const {
    const State st = state(s);
    const auto jj = static_cast<Eigen::Index>(j);
    Vector gsj(static_cast<Eigen::Index>(s.size()));
    for (std::size_t a = 0; a < s.size(); ++a) gsj[static_cast<Eigen::Index>(a)] = gram_(static_cast<Eigen::Index>(s[a]), jj);
    return gram_(jj, jj) - gsj.dot(st.inverse * gsj);
  }

  Matrix sub(const std::vector<std::size_t>& r, const std::vector<std::size_t>& c) const {
    Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(c.size()));
    for (std::size_t a = 0; a < r.size(); ++a)
      for (std::size_t b = 0; b < c.size(); ++b)
        m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            gram_(static_cast<Eigen::Index>(r[a]), static_cast<Eigen::Index>(c[b]));
    return m;
  }

  Vector subvec(const std::vector<std::size_t>& s) const {
    Vector v(static_cast<Eigen::Index>(s.size()));
    for (std::size_t a = 0; a < s.size(); ++a) v[static_cast<Eigen::Index>(a)] = cross_[static_cast<Eigen::Index>(s[a])];
    return v;
  }

  double n_;
  Matrix gram_;
  Vector cross_;
  double yy_ = 0.0;
};

}  // namespace

FittedModel stepwise_aic(const Dataset& data) {
  data.validate();
  require(data.n() >= 2, ErrorCode::kInvalidArgument, "stepwise_aic: need at least two observations");
  if (data.p() == 0) return fit_model(data, ModelSpec{});

  GramStepper stepper(data);
  std::vector<std::size_t> current = stepper.independent_columns();
  auto st = stepper.state(current);
  double current_aic = stepper.aic(st.rss, current.size());

  const std::size_t max_steps = 4 * data.p() + 10;
  for (std::size_t step = 0; step < max_steps; ++step) {
    double best_aic = current_aic;
    std::vector<std::size_t> best_set;
    bool improved = false;

    for (std::size_t pos = 0; pos < current.size(); ++pos) {
      const double rss = stepper.rss_after_drop(st, pos);
      const double a = stepper.aic(rss, current.size() - 1);
      if (a < best_aic - 1e-10) {
        best_aic = a;
        best_set = current;
        best_set.erase(best_set.begin() + static_cast<std::ptrdiff_t>(pos));
        improved = true;
      }
    }
    for (std::size_t j = 0; j < stepper.p(); ++j) {
      if (std::find(current.begin(), current.end(), j) != current.end()) continue;
      const double rss = stepper.rss_after_add(current, st, j);
      if (rss < 0.0) continue;
      const double a = stepper.aic(rss, current.size() + 1);
      if (a < best_aic - 1e-10) {
        best_aic = a;
        best_set = current;
        best_set.push_back(j);
        std::sort(best_set.begin(), best_set.end());
        improved = true;
      }
    }
    if (!improved) break;
    current = std::move(best_set);
    st = stepper.state(current);
    current_aic = stepper.aic(st.rss, current.size());
  }
  return fit_model(data, ModelSpec{current, true});
}

}  // namespace mavg
