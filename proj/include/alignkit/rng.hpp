#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <vector>

namespace alignkit {

/// xoshiro256** 1.0 (Blackman & Vigna), state expanded from a 64-bit seed with
/// splitmix64. All derived draws (uniform, bounded integers, normals,
/// shuffles) are implemented here rather than through <random> distributions,
/// so a seed yields the same stream with any standard library.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  // Uniform integer in [0, bound), bound > 0 (Lemire's multiply-and-reject).
  std::uint64_t below(std::uint64_t bound);
  // Standard normal via the Marsaglia polar method.
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  // Independent child stream keyed by `path`, e.g. {fold, lambda_index}. Pure
  // function of (seed, path); does not advance this generator.
  Rng derive(std::initializer_list<std::uint64_t> path) const;

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

Rng seeded_rng(std::uint64_t seed);

std::uint64_t splitmix64(std::uint64_t& state);

template <class T>
void shuffle(std::vector<T>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(values[i - 1], values[j]);
  }
}

// `count` distinct values from [0, population), in sampled order.
std::vector<std::uint32_t> sample_without_replacement(std::size_t population,
                                                      std::size_t count, Rng& rng);

}  // namespace alignkit
