#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "mavg/model_set.hpp"
#include "mavg/numeric.hpp"
#include "mavg/rng.hpp"
#include "mavg/treatment.hpp"

namespace mavg {

struct MarginalSpec {
  enum class Kind { kNormal, kLognormal, kExponential };
  Kind kind = Kind::kNormal;
  double a = 0.0;  // mean, log-mean, or rate
  double b = 1.0;  // standard deviation or log-sd; unused for the exponential

  static MarginalSpec normal(double mean, double sd);
  static MarginalSpec lognormal(double log_mean, double log_sd);
  static MarginalSpec exponential(double rate);
  double quantile(double u) const;
};

/// n x d uniforms from a Clayton copula via gamma frailty, computed in log space
/// so large theta does not underflow.
Matrix clayton_sample(std::size_t n, std::size_t d, double theta, Rng& rng);
Matrix transform_marginals(const Matrix& u, const std::vector<MarginalSpec>& specs);

/// X1-X4 ~ N(0,1), X5-X7 ~ logN(0,0.5), X8-X10 ~ Exp(1).
std::vector<MarginalSpec> study_marginals();
Matrix study_covariates(std::size_t n, Rng& rng);

struct SimulatedStudy {
  Dataset data;
  Vector mu;  // noiseless conditional mean
};

Vector linear_study_beta();
double linear_study_noise_sd();
double forecast_study_noise_sd();
Vector forecast_study_mean(const Matrix& x);

SimulatedStudy gen_linear_study(std::size_t n, Rng& rng);
SimulatedStudy gen_forecast_study(std::size_t n, Rng& rng);

/// Normal draw whose out-of-range values are replaced by uniform draws on the tail intervals.
struct Truncation {
  double lower, upper;
  double low_from, low_to;
  double high_from, high_to;
};

inline constexpr Truncation kCd4Count{0.0, 10000.0, 0.0, 50.0, 5000.0, 10000.0};
inline constexpr Truncation kCd4Percent{0.06, 0.8, 0.03, 0.09, 0.7, 0.8};
inline constexpr Truncation kZScore{-5.0, 5.0, -10.0, -3.0, 3.0, 10.0};

double truncated_normal(double mean, double sd, const Truncation& bounds, Rng& rng);

/// Subject-major panel; entries after censoring are NaN.
struct LongitudinalPanel {
  std::size_t horizon = 0;
  bool intervened = false;
  std::vector<std::uint64_t> ids;
  Vector v1, v2, v3;
  Matrix l1, l2, l3, a, c, y;  // n x (horizon + 1)

  std::size_t n() const { return ids.size(); }
  /// True when the subject has not been censored at any time up to and including t.
  bool uncensored_through(std::size_t i, std::size_t t) const;
  void resize(std::size_t n, std::size_t horizon);
  void validate() const;
};

/// One subject. Every random input is drawn whether or not it is used, so the
/// observational and intervened trajectories of a stream share their noise.
struct SubjectDraw {
  double v1, v2, v3;
  std::vector<double> l1, l2, l3, a, c, y;
};
SubjectDraw simulate_subject(std::size_t horizon, Rng& rng, const std::optional<TreatmentRule>& intervention);

/// Subject i uses child stream i of `rng` and gets id i.
LongitudinalPanel simulate_longitudinal(std::size_t n, std::size_t horizon, const Rng& rng,
                                        const std::optional<TreatmentRule>& intervention = std::nullopt);

}  // namespace mavg
