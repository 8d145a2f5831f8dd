#include "diffad/fft.hpp"

#include <map>
#include <mutex>
#include <numbers>

#include "diffad/ndarray.hpp"

namespace diffad::fft {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

Plan::Plan(std::size_t n) : n_(n), bitrev_(n), twiddles_(n > 1 ? n - 1 : 1) {
  if (n == 0 || (n & (n - 1)) != 0) throw ShapeError("FFT size must be a power of two");
  unsigned bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (unsigned b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
    bitrev_[i] = r;
  }
  // Stage twiddles stored contiguously: stage with half-size h starts at offset h-1.
  for (std::size_t half = 1; half < n; half <<= 1) {
    for (std::size_t k = 0; k < half; ++k) {
      const double angle = -std::numbers::pi * static_cast<double>(k) / static_cast<double>(half);
      twiddles_[half - 1 + k] = Complex(std::cos(angle), std::sin(angle));
    }
  }
}

void Plan::transform(std::span<Complex> data, bool inverse) const {
  if (data.size() != n_) throw ShapeError("FFT buffer size mismatch");
  for (std::size_t i = 0; i < n_; ++i) {
    if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
  }
  double* d = reinterpret_cast<double*>(data.data());
  const double* tw = reinterpret_cast<const double*>(twiddles_.data());
  const double sign = inverse ? -1.0 : 1.0;
  for (std::size_t i = 0; i + 1 < n_; i += 2) {
    const double ar = d[2 * i], ai = d[2 * i + 1], br = d[2 * i + 2], bi = d[2 * i + 3];
    d[2 * i] = ar + br;
    d[2 * i + 1] = ai + bi;
    d[2 * i + 2] = ar - br;
    d[2 * i + 3] = ai - bi;
  }
  for (std::size_t half = 2; half < n_; half <<= 1) {
    const double* w = tw + 2 * (half - 1);
    for (std::size_t start = 0; start < n_; start += 2 * half) {
      double* a = d + 2 * start;
      double* b = a + 2 * half;
      for (std::size_t k = 0; k < half; ++k) {
        const double wr = w[2 * k], wi = sign * w[2 * k + 1];
        const double vr = b[2 * k] * wr - b[2 * k + 1] * wi;
        const double vi = b[2 * k] * wi + b[2 * k + 1] * wr;
        b[2 * k] = a[2 * k] - vr;
        b[2 * k + 1] = a[2 * k + 1] - vi;
        a[2 * k] += vr;
        a[2 * k + 1] += vi;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n_);
    for (auto& x : data) x *= scale;
  }
}

std::shared_ptr<const Plan> plan_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const Plan>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::make_shared<const Plan>(n)).first;
  return it->second;
}

CausalConvolver::CausalConvolver(std::span<const double> kernel)
    : length_(kernel.size()), plan_(plan_for(next_pow2(2 * kernel.size()))) {
  if (kernel.empty()) throw ShapeError("causal convolution needs L >= 1");
  spectrum_.assign(plan_->size(), Complex{});
  for (std::size_t i = 0; i < length_; ++i) spectrum_[i] = kernel[i];
  plan_->transform(spectrum_, false);
}

void CausalConvolver::apply(std::span<const double> a, std::span<double> out_a,
                            std::span<const double> b, std::span<double> out_b) const {
  const bool pair = !b.empty();
  if (a.size() != length_ || out_a.size() != length_ ||
      (pair && (b.size() != length_ || out_b.size() != length_))) {
    throw ShapeError("causal convolution length mismatch");
  }
  std::vector<Complex> buf(plan_->size());
  for (std::size_t i = 0; i < length_; ++i) buf[i] = Complex(a[i], pair ? b[i] : 0.0);
  plan_->transform(buf, false);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const double xr = buf[i].real(), xi = buf[i].imag(), sr = spectrum_[i].real(), si = spectrum_[i].imag();
    buf[i] = Complex(xr * sr - xi * si, xr * si + xi * sr);
  }
  plan_->transform(buf, true);
  for (std::size_t i = 0; i < length_; ++i) {
    out_a[i] = buf[i].real();
    if (pair) out_b[i] = buf[i].imag();
  }
}

std::vector<double> causal_convolve(std::span<const double> signal, std::span<const double> kernel) {
  if (signal.size() != kernel.size()) {
    throw ShapeError("causal_convolve: signal length " + std::to_string(signal.size()) +
                     " != kernel length " + std::to_string(kernel.size()));
  }
  CausalConvolver conv(kernel);
  std::vector<double> out(signal.size());
  conv.apply(signal, out);
  return out;
}

}  // namespace diffad::fft
