#pragma once

#include <cstdint>
#include <random>

namespace cplcalib {

// Deterministic random source. Wraps std::mt19937_64 but derives uniform and
// gaussian variates from the raw bit stream itself, so a given seed produces
// the same sequence on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent sub-stream derived from (seed, stream); used so that
  // per-config generation is order-independent.
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();

  // Uniform in [lo, hi); returns lo exactly when hi <= lo.
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller (polar form avoided to keep the draw
  // count per call fixed at two).
  double gaussian();

 private:
  std::mt19937_64 engine_;
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

}  // namespace cplcalib
