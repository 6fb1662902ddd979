#include "mavg/synthetic.hpp"

#include <cmath>
#include <limits>

#include "mavg/error.hpp"

namespace mavg {

MarginalSpec MarginalSpec::normal(double mean, double sd) {
  require(sd > 0.0, ErrorCode::kInvalidArgument, "normal marginal: sd must be positive");
  return {Kind::kNormal, mean, sd};
}

MarginalSpec MarginalSpec::lognormal(double log_mean, double log_sd) {
  require(log_sd > 0.0, ErrorCode::kInvalidArgument, "lognormal marginal: sd must be positive");
  return {Kind::kLognormal, log_mean, log_sd};
}

MarginalSpec MarginalSpec::exponential(double rate) {
  require(rate > 0.0, ErrorCode::kInvalidArgument, "exponential marginal: rate must be positive");
  return {Kind::kExponential, rate, 0.0};
}

double MarginalSpec::quantile(double u) const {
  switch (kind) {
    case Kind::kNormal: return a + b * normal_quantile(u);
    case Kind::kLognormal: return std::exp(a + b * normal_quantile(u));
    case Kind::kExponential: return -std::log1p(-u) / a;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Matrix clayton_sample(std::size_t n, std::size_t d, double theta, Rng& rng) {
  require(theta > 0.0 && std::isfinite(theta), ErrorCode::kInvalidArgument, "clayton_sample: theta must be positive");
  constexpr double kTiny = std::numeric_limits<double>::min();
  const double kBelowOne = std::nextafter(1.0, 0.0);
  Matrix u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const double log_v = rng.log_gamma_variate(1.0 / theta);
    for (std::size_t j = 0; j < d; ++j) {
      // log(1 + E/V) without forming E/V.
      const double x = std::log(rng.exponential()) - log_v;
      const double log1p_ratio = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      const double value = std::exp(-log1p_ratio / theta);
      u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::clamp(value, kTiny, kBelowOne);
    }
  }
  return u;
}

Matrix transform_marginals(const Matrix& u, const std::vector<MarginalSpec>& specs) {
  require(specs.size() == static_cast<std::size_t>(u.cols()), ErrorCode::kDimensionMismatch,
          "transform_marginals: one marginal per column required");
  Matrix x(u.rows(), u.cols());
  for (Eigen::Index j = 0; j < u.cols(); ++j)
    for (Eigen::Index i = 0; i < u.rows(); ++i) x(i, j) = specs[static_cast<std::size_t>(j)].quantile(u(i, j));
  return x;
}

std::vector<MarginalSpec> study_marginals() {
  std::vector<MarginalSpec> m;
  for (int j = 0; j < 4; ++j) m.push_back(MarginalSpec::normal(0.0, 1.0));
  for (int j = 0; j < 3; ++j) m.push_back(MarginalSpec::lognormal(0.0, 0.5));
  for (int j = 0; j < 3; ++j) m.push_back(MarginalSpec::exponential(1.0));
  return m;
}

Matrix study_covariates(std::size_t n, Rng& rng) {
  return transform_marginals(clayton_sample(n, 10, 1.0, rng), study_marginals());
}

Vector linear_study_beta() {
  Vector b(10);
  b << 0, 0, 1, 2, 3, 3, 2, 1, 0.5, 0;
  return b;
}

double linear_study_noise_sd() { return std::exp(2.0); }
double forecast_study_noise_sd() { return std::exp(1.5); }

Vector forecast_study_mean(const Matrix& x) {
  require(x.cols() >= 9, ErrorCode::kDimensionMismatch, "forecast mean: need at least 9 covariates");
  return (-5.0 + 0.5 * x.col(1).array() + 1.5 * x.col(5).array() + 1.5 * x.col(8).array() +
          x.col(5).array() * x.col(8).array() + x.col(1).array().square())
      .matrix();
}

namespace {

SimulatedStudy finish(Matrix x, Vector mu, double sd, Rng& rng) {
  SimulatedStudy s;
  s.data.y.resize(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) s.data.y[i] = rng.normal(mu[i], sd);
  s.data.x = std::move(x);
  s.data.names = default_names(10);
  s.mu = std::move(mu);
  return s;
}

}  // namespace

SimulatedStudy gen_linear_study(std::size_t n, Rng& rng) {
  require(n >= 1, ErrorCode::kInvalidArgument, "gen_linear_study: n must be positive");
  Matrix x = study_covariates(n, rng);
  Vector mu = x * linear_study_beta();
  return finish(std::move(x), std::move(mu), linear_study_noise_sd(), rng);
}

SimulatedStudy gen_forecast_study(std::size_t n, Rng& rng) {
  require(n >= 1, ErrorCode::kInvalidArgument, "gen_forecast_study: n must be positive");
  Matrix x = study_covariates(n, rng);
  Vector mu = forecast_study_mean(x);
  return finish(std::move(x), std::move(mu), forecast_study_noise_sd(), rng);
}

double truncated_normal(double mean, double sd, const Truncation& t, Rng& rng) {
  require(t.low_from <= t.low_to && t.high_from <= t.high_to, ErrorCode::kInvalidArgument,
          "truncated_normal: invalid tail interval");
  const double z = sd == 0.0 ? mean : rng.normal(mean, sd);
  // The tail draw is always consumed so that the stream position does not depend on z.
  const double tail = rng.uniform();
  if (z < t.lower) return t.low_from + (t.low_to - t.low_from) * tail;
  if (z > t.upper) return t.high_from + (t.high_to - t.high_from) * tail;
  return z;
}

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

SubjectDraw simulate_subject(std::size_t horizon, Rng& rng, const std::optional<TreatmentRule>& intervention) {
  const std::size_t len = horizon + 1;
  SubjectDraw s;
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  for (auto* v : {&s.l1, &s.l2, &s.l3, &s.a, &s.c, &s.y}) v->assign(len, kNaN);

  s.v1 = rng.bernoulli(4392.0 / 5826.0) ? 1.0 : 0.0;
  s.v2 = rng.bernoulli(s.v1 == 1.0 ? 2222.0 / 4392.0 : 758.0 / 1434.0) ? 1.0 : 0.0;
  s.v3 = rng.uniform(1.0, 5.0);
  const bool v1 = s.v1 == 1.0;

  double l1 = truncated_normal(v1 ? 650.0 : 720.0, v1 ? 350.0 : 400.0, kCd4Count, rng);
  const double l1_tilde = (l1 - 671.7468) / (10.0 * 352.2788) + 1.0;
  double l2 = truncated_normal(0.16 + 0.05 * (l1 - 650.0) / 650.0, 0.07, kCd4Percent, rng);
  const double l2_tilde = (l2 - 0.1648594) / (10.0 * 0.06980332) + 1.0;
  double l3 = truncated_normal((v1 ? -1.65 : -2.05) + 0.1 * s.v3 + 0.05 * (l1 - 650.0) / 650.0 +
                                   0.05 * (l2 - 16.0) / 16.0,
                               1.0, kZScore, rng);
  const double l3_base = l3;
  // Baseline treatment and censoring are degenerate at zero under every regime.
  double a = 0.0;
  double y = truncated_normal(-2.6 + 0.1 * (s.v3 > 2.0 ? 1.0 : 0.0) + 0.3 * (v1 ? 0.0 : 1.0) + (l3 + 1.45), 1.1,
                              kZScore, rng);
  s.l1[0] = l1;
  s.l2[0] = l2;
  s.l3[0] = l3;
  s.a[0] = a;
  s.c[0] = 0.0;
  s.y[0] = y;

  for (std::size_t t = 1; t <= horizon; ++t) {
    const double td = static_cast<double>(t);
    const double slope = t <= 4 ? 13.0 : 4.0;
    const double l1n = truncated_normal(slope * std::log(td * (1034.0 - 662.0) / 8.0) + l1 + 2.0 * l2 + 2.0 * l3 +
                                            2.5 * a,
                                        50.0, kCd4Count, rng);
    const double l2n =
        truncated_normal(l2 + 0.0003 * (l1n - l1) + 0.0005 * l3 + 0.0005 * a * l1_tilde, 0.02, kCd4Percent, rng);
    const double l3n =
        truncated_normal(l3 + 0.0017 * (l1n - l1) + 0.2 * (l2n - l2) + 0.005 * a * l2_tilde, 0.5, kZScore, rng);

    const double u_treat = rng.uniform();
    double an;
    if (intervention) {
      an = apply_rule(*intervention, l1n, l2n, l3n, static_cast<int>(a));
    } else if (a == 1.0) {
      an = 1.0;
    } else {
      const double p = logistic(-2.4 + 0.015 * (750.0 - l1n) + 5.0 * (0.2 - l2n) - 0.8 * l3n + 0.8 * td);
      an = u_treat < p ? 1.0 : 0.0;
    }
    const double u_censor = rng.uniform();
    double cn = 0.0;
    if (!intervention) {
      const double p = logistic(-6.0 + 0.01 * (750.0 - l1n) + (0.2 - l2n) - 0.65 * l3n - an);
      cn = u_censor < p ? 1.0 : 0.0;
    }

    s.l1[t] = l1n;
    s.l2[t] = l2n;
    s.l3[t] = l3n;
    s.a[t] = an;
    s.c[t] = cn;
    if (cn == 1.0) break;

    const double d1 = l1n - l1, d2 = l2n - l2, d3 = (l3n - l3) * (l3_base + 1.5135);
    const double mean = y + 0.00005 * d1 - 0.000001 * d1 * d1 * l1_tilde + 0.01 * d2 - 0.0001 * d2 * d2 * l2_tilde +
                        0.07 * d3 - 0.001 * d3 * d3 + 0.005 * an + 0.075 * a + 0.05 * an * a;
    y = truncated_normal(mean, 0.01, kZScore, rng);
    s.y[t] = y;
    l1 = l1n;
    l2 = l2n;
    l3 = l3n;
    a = an;
  }
  return s;
}

bool LongitudinalPanel::uncensored_through(std::size_t i, std::size_t t) const {
  const auto r = static_cast<Eigen::Index>(i);
  for (std::size_t s = 0; s <= t; ++s)
    if (!(c(r, static_cast<Eigen::Index>(s)) == 0.0)) return false;
  return true;
}

void LongitudinalPanel::resize(std::size_t n, std::size_t h) {
  horizon = h;
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(h + 1);
  ids.assign(n, 0);
  for (auto* v : {&v1, &v2, &v3}) v->resize(rows);
  for (auto* m : {&l1, &l2, &l3, &a, &c, &y}) m->setConstant(rows, cols, std::numeric_limits<double>::quiet_NaN());
}

void LongitudinalPanel::validate() const {
  const auto rows = static_cast<Eigen::Index>(n());
  const auto cols = static_cast<Eigen::Index>(horizon + 1);
  require(v1.size() == rows && v2.size() == rows && v3.size() == rows, ErrorCode::kDimensionMismatch,
          "panel: baseline length mismatch");
  for (const Matrix* m : {&l1, &l2, &l3, &a, &c, &y})
    require(m->rows() == rows && m->cols() == cols, ErrorCode::kDimensionMismatch, "panel: time-varying shape mismatch");
  require(v1.allFinite() && v2.allFinite() && v3.allFinite(), ErrorCode::kNumerical, "panel: non-finite baseline");
  for (Eigen::Index i = 0; i < rows; ++i) {
    require(l1(i, 0) == l1(i, 0) && a(i, 0) == a(i, 0) && c(i, 0) == 0.0, ErrorCode::kInvalidArgument,
            "panel: baseline record missing for subject " + std::to_string(ids[static_cast<std::size_t>(i)]));
  }
}

LongitudinalPanel simulate_longitudinal(std::size_t n, std::size_t horizon, const Rng& rng,
                                        const std::optional<TreatmentRule>& intervention) {
  LongitudinalPanel p;
  p.resize(n, horizon);
  p.intervened = intervention.has_value();
  for (std::size_t i = 0; i < n; ++i) {
    Rng child = rng.child(i);
    const SubjectDraw s = simulate_subject(horizon, child, intervention);
    const auto r = static_cast<Eigen::Index>(i);
    p.ids[i] = i;
    p.v1[r] = s.v1;
    p.v2[r] = s.v2;
    p.v3[r] = s.v3;
    for (std::size_t t = 0; t <= horizon; ++t) {
      const auto c = static_cast<Eigen::Index>(t);
      p.l1(r, c) = s.l1[t];
      p.l2(r, c) = s.l2[t];
      p.l3(r, c) = s.l3[t];
      p.a(r, c) = s.a[t];
      p.c(r, c) = s.c[t];
      p.y(r, c) = s.y[t];
    }
  }
  return p;
}

}  // namespace mavg
