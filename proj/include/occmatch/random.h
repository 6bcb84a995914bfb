#pragma once

#include <cstdint>
#include <cmath>
#include <limits>
#include <random>

namespace occmatch {

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Maps 64 random bits to the open interval (0, 1).
inline double BitsToOpenUnit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Counter-based uniform stream: the value for a counter depends only on
// (seed, counter), so parallel consumers stay bit-identical to serial ones.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(SplitMix64(seed)) {}

  double Uniform(std::uint64_t counter) const {
    return BitsToOpenUnit(SplitMix64(key_ ^ SplitMix64(counter)));
  }

 private:
  std::uint64_t key_;
};

// Sequential generator with a platform-independent output sequence
// (std::mt19937_64 is fully specified; the std distributions are not).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  double Uniform() { return BitsToOpenUnit(engine_()); }
  // Uniform integer in [0, n) by rejection.
  std::uint64_t Below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }
  double Normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline double SeededRng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = Uniform();
  const double u2 = Uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

}  // namespace occmatch
