#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace lrcox {

/// Counter-based generator: output k is a SplitMix64 finalizer applied to
/// key + k * golden-gamma. Substreams are addressed by (seed, ids...) so that
/// resizing one stream never perturbs another.
///
/// Distributions are implemented here (not via <random>) so that draws are
/// bitwise identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids);

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  double exponential(double mean);
  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace lrcox
