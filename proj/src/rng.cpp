#include "diffad/rng.hpp"

#include <cmath>
#include <numbers>

namespace diffad {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(mix_seed(base) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

std::uint64_t Rng::uniform_int(std::uint64_t lo, std::uint64_t hi) {
  const std::uint64_t span = hi - lo + 1;
  if (span == 0) return engine_();  // full 64-bit range
  // rejection sampling keeps the result unbiased
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return lo + r % span;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

NdArray Rng::normal_array(const Shape& shape) {
  NdArray out(shape);
  for (auto& v : out.values()) v = normal();
  return out;
}

}  // namespace diffad
