#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace rdl {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Folds a sequence of words into a 64-bit stream key.
inline constexpr std::uint64_t hash_key(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC908ULL;
  for (std::uint64_t w : words) h = splitmix64(h ^ splitmix64(w));
  return h;
}

/// Stream tags keep the different consumers of randomness apart.
enum class StreamTag : std::uint64_t {
  site = 1,
  path = 2,
  config = 3,
  x_sample = 4,
  xi_sample = 5,
  synthetic = 6,
};

/// Counter-based generator: output k of stream `key` is a pure function of
/// (key, k), so any stream can be regenerated without replaying others.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}
  CounterRng(StreamTag tag, std::initializer_list<std::uint64_t> words) noexcept
      : key_(splitmix64(static_cast<std::uint64_t>(tag)) ^ hash_key(words)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    return splitmix64(key_ ^ splitmix64(counter_++));
  }

  /// Uniform double in the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Encodes a signed lattice coordinate as a key word.
inline constexpr std::uint64_t coord_word(long long q) noexcept {
  return static_cast<std::uint64_t>(q) * 0xD1B54A32D192ED03ULL;
}

}  // namespace rdl
