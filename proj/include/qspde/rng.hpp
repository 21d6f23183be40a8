#pragma once

#include <cstdint>

namespace qspde::rng {

// splitmix64 finalizer; bijective 64-bit mixer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based key for one noise increment: every draw is a pure function
// of (master_seed, sample, step, mode), so a single sample can be replayed
// without touching any other stream.
inline std::uint64_t key(std::uint64_t master, std::uint64_t sample,
                         std::uint64_t step, std::uint64_t mode) {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ (0x517cc1b727220a95ULL + sample));
  h = mix64(h ^ (0x2545f4914f6cdd1dULL + step));
  h = mix64(h ^ (0x9e3779b97f4a7c15ULL + mode));
  return h;
}

// Uniform in (0, 1]; the offset keeps log() finite.
inline double uniform_open(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// Standard normal via Box-Muller on two mixed sub-streams of the key.
double standard_normal(std::uint64_t key);

}  // namespace qspde::rng
