#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace noloco {

/// Splittable deterministic random stream.
///
/// A stream is identified by a (seed, stream-id) key. Identical keys produce
/// identical sample sequences regardless of what any other stream has
/// consumed, so every worker or purpose can own an independent stream and
/// results stay reproducible under any scheduling order. `derive` creates a
/// child stream keyed off the parent identity (not its consumption state).
///
/// Internals: xoshiro256++ seeded via splitmix64 from the mixed key. All
/// floating-point conversions are explicit bit manipulations, so sequences do
/// not depend on the standard library's distribution implementations.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Child stream keyed by (seed, hash(stream_id, tag)). Independent of how
  /// much this stream has been consumed.
  RngStream derive(std::uint64_t tag) const;
  RngStream derive(std::uint64_t tag_a, std::uint64_t tag_b) const {
    return derive(tag_a).derive(tag_b);
  }

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform on (0, 1]; safe as a log() argument.
  double uniform_open();

  /// Standard normal via Box-Muller (one spare cached).
  double normal();

  /// exp(mu + sqrt(sigma2) * z). Throws std::invalid_argument for sigma2 < 0.
  double lognormal(double mu, double sigma2);

  /// Unbiased uniform integer in [0, n). n must be positive.
  std::uint64_t bounded(std::uint64_t n);

  /// Fisher-Yates shuffle.
  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      auto j = static_cast<decltype(i)>(bounded(static_cast<std::uint64_t>(i) + 1));
      std::swap(first[i], first[j]);
    }
  }

  /// Uniform random permutation of {0, ..., n-1}.
  std::vector<int> permutation(int n);

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace noloco
