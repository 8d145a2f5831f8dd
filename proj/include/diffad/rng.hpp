#pragma once

#include <cstdint>
#include <random>

#include "diffad/ndarray.hpp"

namespace diffad {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// Seeded random stream with a fully specified output sequence
/// (mt19937_64 plus hand-rolled uniform/normal transforms, so results do not
/// depend on the standard library's distribution implementations).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(mix_seed(seed)) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [lo, hi].
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
  double normal();
  NdArray normal_array(const Shape& shape);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace diffad
