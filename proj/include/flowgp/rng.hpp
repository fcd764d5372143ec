#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace flowgp {

// Counter-based generator: the i-th draw is a fixed 64-bit hash (splitmix64
// finalizer) of seed + i*gamma.  Substreams are derived by hashing the base
// seed with the stream index, so chains split by index do not overlap in
// practice and every draw is reproducible from (seed, stream, counter) alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  // Independent substream; deterministic in (base seed, index).
  Rng stream(std::uint64_t index) const {
    return Rng(mix(seed_ ^ mix(0x8BB84B93962EEFCDull + index)));
  }

  std::uint64_t next_u64() {
    counter_ += 1;
    return mix(seed_ + counter_ * 0x9E3779B97F4A7C15ull);
  }

  // Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second draw of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform index in [0, n); n must be positive.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace flowgp
