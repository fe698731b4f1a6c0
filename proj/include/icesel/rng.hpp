#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace icesel {

// Deterministic RNG helpers. std::mt19937_64 output is fully specified by
// the standard, but the std distributions are not, so bounded draws and
// gaussians are implemented here to keep results identical across
// platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform draw in [0, n) via rejection sampling (no modulo bias).
  std::uint64_t below(std::uint64_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  // Box-Muller; stateless across calls (the spare value is discarded).
  double normal(double mean, double sigma);

  // k distinct indices from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace icesel
