#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace slqr {

// splitmix64 step: advances `state` and returns a well-mixed 64-bit word.
// Used only for seeding; the draw engine itself is std::mt19937_64, whose
// output sequence is specified exactly by the standard on every platform.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d49bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent substream seed from (seed, a, b). Datasets key this
// with (example index, attempt number) so every example, and every redraw of
// it, owns a private stream regardless of generation order or thread count.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  s = h ^ (a + 0x9e3779b97f4a7c15ULL);
  h = splitmix64(s);
  s = h ^ (b + 0xbf58476d1ce4e5b9ULL);
  return splitmix64(s);
}

// Uniform in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Standard normal draws via the Marsaglia polar method. Spelled out here
// instead of std::normal_distribution because the standard does not pin down
// that distribution's algorithm, and dataset bytes must not depend on the
// standard library vendor.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01(engine_) - 1.0;
      v = 2.0 * uniform01(engine_) - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace slqr
