#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mavg {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Counter-based generator: output i of stream (seed, stream) is
/// mix64(key + i * golden). Children derive new keys, so any (seed, stream,
/// child path) names a fixed, platform-independent sequence. All variate
/// transforms are implemented here rather than through <random>, whose
/// distributions are not reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  Rng child(std::uint64_t index) const noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double uniform(double a, double b) noexcept { return a + (b - a) * uniform(); }
  double normal() noexcept;
  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }
  double exponential(double rate = 1.0) noexcept;
  /// Natural log of a Gamma(shape, 1) draw; stays finite for very small shapes.
  double log_gamma_variate(double shape) noexcept;
  double gamma(double shape) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  std::uint64_t key() const noexcept { return key_; }

 private:
  Rng(std::uint64_t key, std::uint64_t counter, int) noexcept : key_(key), counter_(counter) {}
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Fold id per observation; fold sizes differ by at most one, deterministic in seed.
std::vector<std::size_t> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

/// As kfold_split, but the assignment of an observation depends only on its id,
/// so permuting the rows permutes the assignment with them.
std::vector<std::size_t> kfold_split_keyed(std::span<const std::uint64_t> ids, std::size_t k, std::uint64_t seed);

}  // namespace mavg
