#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace eotk {

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a over the bytes of `text`, used to fold string tags into seeds.
constexpr std::uint64_t hash_tag(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Splittable counter: a child seed is a pure function of the parent seed and
/// the ordered list of counters/tags that name the child.
class SeedPath {
 public:
  constexpr explicit SeedPath(std::uint64_t root) noexcept : state_(mix64(root)) {}

  constexpr SeedPath child(std::uint64_t counter) const noexcept {
    SeedPath next(*this);
    next.state_ = mix64(state_ ^ mix64(counter + 0x632be59bd9b4e019ULL));
    return next;
  }
  constexpr SeedPath child(std::string_view tag) const noexcept { return child(hash_tag(tag)); }

  constexpr std::uint64_t value() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

template <typename... Parts>
constexpr std::uint64_t derive_seed(std::uint64_t root, Parts&&... parts) noexcept {
  SeedPath path(root);
  ((path = path.child(parts)), ...);
  return path.value();
}

/// Seeded generator with library-independent draws: the standard
/// distributions are implementation-defined, so sampling is done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via Box-Muller (one value per call).
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Fisher-Yates permutation of [0, n).
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace eotk
