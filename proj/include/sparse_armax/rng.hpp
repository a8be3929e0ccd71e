#pragma once

#include <cstdint>
#include <random>

namespace sparse_armax {

// Seeded Gaussian source.
//
// The engine is std::mt19937_64 initialised through std::seed_seq from
// (seed, stream), so independent streams (input excitation, noise, random
// support) derived from one trial seed never overlap in practice and are
// reproducible across platforms.  Uniforms use the top 53 bits; normals use
// Marsaglia's polar method, caching the second variate.
class Rng {
 public:
  enum Stream : std::uint64_t { kNoise = 1, kInput = 2, kSupport = 3, kRegressor = 4 };

  Rng(std::uint64_t seed, std::uint64_t stream);

  // Uniform on the open interval (0, 1).
  double uniform();
  double gaussian();
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sparse_armax
