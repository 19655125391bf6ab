#include "pcl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

namespace pcl {

std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index) {
  std::uint64_t state = root ^ 0x6a09e667f3bcc909ULL;
  for (unsigned char c : tag) {
    state ^= c;
    splitmix64(state);
  }
  state ^= index * 0x2545f4914f6cdd1dULL;
  std::uint64_t mixed = state;
  return splitmix64(mixed);
}

std::uint64_t hash_doubles(std::uint64_t seed, std::uint64_t round, std::span<const double> row) {
  std::uint64_t state = seed ^ (round * 0x9e3779b97f4a7c15ULL);
  splitmix64(state);
  for (double x : row) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    state ^= bits;
    splitmix64(state);
  }
  std::uint64_t mixed = state;
  return splitmix64(mixed);
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection to avoid modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = eng_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_pos();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

std::vector<std::size_t> sample_distinct(Rng& rng, std::size_t n, std::size_t r,
                                         std::optional<std::size_t> exclude) {
  const std::size_t pool = n - (exclude && *exclude < n ? 1 : 0);
  if (r >= pool) {
    std::vector<std::size_t> all;
    all.reserve(pool);
    for (std::size_t i = 0; i < n; ++i)
      if (!exclude || i != *exclude) all.push_back(i);
    return all;
  }
  std::vector<std::size_t> out;
  out.reserve(r);
  if (r * 2 >= pool) {
    // Dense case: partial Fisher-Yates over the admissible pool.
    std::vector<std::size_t> idx;
    idx.reserve(pool);
    for (std::size_t i = 0; i < n; ++i)
      if (!exclude || i != *exclude) idx.push_back(i);
    for (std::size_t t = 0; t < r; ++t) {
      const std::size_t j = t + static_cast<std::size_t>(rng.uniform_int(idx.size() - t));
      std::swap(idx[t], idx[j]);
      out.push_back(idx[t]);
    }
    return out;
  }
  // Sparse case: rejection sampling with a seen-set.
  std::vector<bool> seen(n, false);
  while (out.size() < r) {
    const std::size_t c = static_cast<std::size_t>(rng.uniform_int(n));
    if (seen[c] || (exclude && c == *exclude)) continue;
    seen[c] = true;
    out.push_back(c);
  }
  return out;
}

}  // namespace pcl
