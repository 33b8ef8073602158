#pragma once

#include <cstdint>
#include <initializer_list>

namespace signforge {

/// splitmix64 step; used to derive independent seeds from a master seed.
std::uint64_t splitmix64(std::uint64_t& state);

/// Combines a master seed with a list of stream ids into one derived seed.
/// Deterministic and order-sensitive: derive(s, {a,b}) != derive(s, {b,a}).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> ids);

/// Deterministic RNG with hand-rolled distributions so that streams are
/// reproducible independent of the standard library implementation.
/// Core generator is xoshiro256**.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n), n > 0.
  std::uint64_t uniform_int(std::uint64_t n);
  /// Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev);

  /// Creates an independent child stream keyed by `id`.
  Rng child(std::uint64_t id) const;

 private:
  std::uint64_t s_[4];
  std::uint64_t seed_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace signforge
