#pragma once

#include <cstdint>
#include <random>

namespace dctesim {

// splitmix64 finalizer; used wherever a stateless, seed-keyed draw is needed
// (ECMP hashing, per-flow detector sampling).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

// Maps a 64-bit hash to [0, 1) using the top 53 bits.
constexpr double unit_interval(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Maps a 64-bit hash to [0, n) by multiply-high.
inline std::uint64_t bounded(std::uint64_t h, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(h) * n) >> 64);
}

// Seeded generator with portable derived draws. std::mt19937_64's output
// sequence is fixed by the standard; the std distributions are not, so the
// derived draws are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() { return unit_interval(engine_()); }

  // Unbiased integer in [0, n), n > 0 (Lemire's rejection method).
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t x = engine_();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = engine_();
        m = static_cast<unsigned __int128>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dctesim
