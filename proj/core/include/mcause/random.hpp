#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace mcause {

// Counter-based seeding: every (seed, stream, counter) triple names an
// independent generator, so per-unit draws do not depend on evaluation order.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t counter);

// SplitMix64 stream. Satisfies UniformRandomBitGenerator; the sampling helpers
// below are implemented here rather than via <random> distributions so that
// outputs are identical across standard library implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter)
      : state_(mix_seed(seed, stream, counter)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()();

  // Uniform on [0, 1).
  double uniform();
  // Uniform integer on [0, n).
  std::size_t below(std::size_t n);
  // Index drawn with probability proportional to `weights` (need not sum to 1).
  int categorical(std::span<const double> weights);
  double normal();
  double gamma(double shape);

 private:
  std::uint64_t state_;
};

std::vector<double> dirichlet(Rng& rng, std::size_t k, double concentration);

template <typename T>
void shuffle(std::span<T> values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::size_t j = rng.below(i);
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace mcause
