#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace pcl {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// All randomness flows from one root seed; subsystems get independent streams
// keyed by a tag string and an index.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index = 0);

// Content hash of a row of doubles, mixed with (seed, round). Used where a
// random draw must depend on a point's value rather than its position.
std::uint64_t hash_doubles(std::uint64_t seed, std::uint64_t round, std::span<const double> row);

// Deterministic RNG with hand-rolled distributions so that streams do not
// depend on the standard library's unspecified distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double uniform_pos() { return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller; one spare cached per pair.
  double normal();

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fisher-Yates permutation of {0..n-1}.
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

// r distinct values from {0..n-1} \ {exclude}; if fewer than r are available
// all of them are returned (ascending order in that case).
std::vector<std::size_t> sample_distinct(Rng& rng, std::size_t n, std::size_t r,
                                         std::optional<std::size_t> exclude = std::nullopt);

}  // namespace pcl
