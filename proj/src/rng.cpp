#include "mavg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mavg/error.hpp"
#include "mavg/numeric.hpp"

namespace mavg {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(mix64(mix64(seed + kGolden) ^ mix64(stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL))),
      counter_(0) {}

Rng Rng::child(std::uint64_t index) const noexcept {
  return Rng(mix64(key_ ^ mix64(index + 0x632BE59BD9B4E019ULL)), 0, 0);
}

std::uint64_t Rng::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double Rng::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() noexcept { return normal_quantile(uniform()); }

double Rng::exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

double Rng::log_gamma_variate(double shape) noexcept {
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a + 1) * U^(1/a)
    const double u = uniform();
    return log_gamma_variate(shape + 1.0) + std::log(u) / shape;
  }
  // Marsaglia and Tsang
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return std::log(d * v);
  }
}

double Rng::gamma(double shape) noexcept { return std::exp(log_gamma_variate(shape)); }

std::vector<std::size_t> kfold_split_keyed(std::span<const std::uint64_t> ids, std::size_t k, std::uint64_t seed) {
  const std::size_t n = ids.size();
  if (k < 2 || k > n) {
    std::ostringstream msg;
    msg << "kfold_split: need 2 <= k <= n (k = " << k << ", n = " << n << ")";
    throw Error(ErrorCode::kInvalidArgument, msg.str());
  }
  const std::uint64_t key = mix64(seed ^ 0xA0761D6478BD642FULL);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = {mix64(key ^ mix64(ids[i])), ids[i]};
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return order[a] < order[b]; });
  std::vector<std::size_t> fold(n);
  for (std::size_t r = 0; r < n; ++r) fold[idx[r]] = r % k;
  return fold;
}

std::vector<std::size_t> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::uint64_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::uint64_t{0});
  return kfold_split_keyed(ids, k, seed);
}

}  // namespace mavg
