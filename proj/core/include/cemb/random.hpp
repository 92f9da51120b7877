#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cemb {

/// Seeded generator with portable uniform/normal draws.
///
/// The bit source is std::mt19937_64, whose output sequence is fixed by the
/// standard. The real-valued draws are implemented here rather than through
/// std::*_distribution so a seed yields identical numbers on every standard
/// library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent generator for a named purpose ("data", "init", "batching").
  static Rng stream(std::uint64_t seed, std::string_view name);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);
  /// Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cemb
