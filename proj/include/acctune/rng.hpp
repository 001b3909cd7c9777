#pragma once

#include <cstdint>
#include <random>

namespace acctune {

// Seeded RNG with a fixed draw discipline so runs replay bit-identically on
// any platform. mt19937_64 output is specified by the standard; the
// distribution helpers below avoid std::uniform_*_distribution, whose
// sequences differ between library implementations. Every helper consumes
// exactly one engine step per call.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // one uniform bit
  bool bit() { return (engine_() & 1u) != 0; }

  // uniform double in [0, 1), 53 bits of precision
  double real01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // uniform index in [0, n); modulo bias is ~n / 2^64, irrelevant for the
  // small n used here (population slots, crossover cut points)
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace acctune
