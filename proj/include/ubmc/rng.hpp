#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>

namespace ubmc {

/// Any source of U(0,1) and N(0,1) variates. Couplings and kernels are
/// templated on this so tests can drive them with scripted noise.
template <class R>
concept NoiseSource = requires(R& r) {
  { r.uniform() } -> std::convertible_to<double>;
  { r.normal() } -> std::convertible_to<double>;
};

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Tags separating the sub-streams of one replicate.
enum class Phase : std::uint64_t {
  truncation = 1,
  level = 2,
  start = 3,
  baseline = 4,
  bootstrap = 5,
  pilot = 6,
};

/// Identifies an independent stream. Keys form a tree: every child key is a
/// hash of its parent and a tag, so (seed, replicate, level, phase) paths
/// never collide in practice and never depend on scheduling.
class StreamKey {
 public:
  constexpr StreamKey() = default;
  constexpr explicit StreamKey(std::uint64_t raw) : raw_(raw) {}

  static constexpr StreamKey root(std::uint64_t seed) noexcept {
    return StreamKey(detail::mix64(seed ^ 0x6A09E667F3BCC909ULL));
  }

  [[nodiscard]] constexpr StreamKey child(std::uint64_t tag) const noexcept {
    return StreamKey(detail::mix64(raw_ + detail::mix64(tag + 0x9E3779B97F4A7C15ULL)));
  }
  [[nodiscard]] constexpr StreamKey child(Phase phase) const noexcept {
    return child(static_cast<std::uint64_t>(phase) << 56);
  }
  [[nodiscard]] constexpr StreamKey replicate(std::uint64_t r) const noexcept { return child(r); }
  [[nodiscard]] constexpr StreamKey level(std::uint64_t i) const noexcept {
    return child(Phase::level).child(i);
  }

  [[nodiscard]] constexpr std::uint64_t raw() const noexcept { return raw_; }
  friend constexpr bool operator==(StreamKey, StreamKey) = default;

 private:
  std::uint64_t raw_ = 0;
};

/// Counter-based generator: the n-th output is a pure function of (key, n).
/// Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  constexpr explicit Stream(StreamKey key) noexcept : key_(key.raw()) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return detail::mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by Box-Muller; always consumes exactly two uniforms.
  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  [[nodiscard]] constexpr std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

static_assert(NoiseSource<Stream>);

}  // namespace ubmc
