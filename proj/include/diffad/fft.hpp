#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace diffad::fft {

using Complex = std::complex<double>;

std::size_t next_pow2(std::size_t n);

/// Precomputed bit-reversal permutation and twiddles for a radix-2 transform.
class Plan {
 public:
  explicit Plan(std::size_t n);
  std::size_t size() const { return n_; }
  /// In-place transform; the inverse includes the 1/n normalization.
  void transform(std::span<Complex> data, bool inverse) const;

 private:
  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<Complex> twiddles_;
};

/// Shared, cached plan for size n (a power of two). Thread-safe.
std::shared_ptr<const Plan> plan_for(std::size_t n);

/// output[i] = sum_{j<=i} kernel[j] * signal[i-j], i in [0, L).
/// Both sequences must have the same length L >= 1.
std::vector<double> causal_convolve(std::span<const double> signal, std::span<const double> kernel);

/// Causal convolution against one fixed kernel, reusing its spectrum across
/// many signals. Two real signals are packed into one complex transform.
class CausalConvolver {
 public:
  explicit CausalConvolver(std::span<const double> kernel);
  std::size_t length() const { return length_; }
  /// Convolves `a` (and `b`, if non-empty) into the matching outputs.
  void apply(std::span<const double> a, std::span<double> out_a, std::span<const double> b = {},
             std::span<double> out_b = {}) const;

 private:
  std::size_t length_;
  std::shared_ptr<const Plan> plan_;
  std::vector<Complex> spectrum_;
};

}  // namespace diffad::fft
