#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace qda {

// Deterministic random source. Every draw is built on the raw engine output
// instead of std::*_distribution so streams are identical across standard
// library implementations and the full state serializes exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], both inclusive.
  int uniform_int(int lo, int hi);

  // Standard normal via Box-Muller; stateless beyond the engine.
  double normal();

  // Marsaglia-Tsang gamma sampler, shape > 0, unit scale.
  double gamma(double shape);

  double beta(double a, double b);

  std::string save_state() const;
  void restore_state(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

}  // namespace qda
