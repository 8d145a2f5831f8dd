#pragma once

// Reference implementations used only by tests. Each is the slow, obvious
// version of something the library computes another way.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "diffad/autodiff.hpp"
#include "diffad/ndarray.hpp"
#include "diffad/rng.hpp"
#include "diffad/ssm.hpp"

namespace oracle {

using diffad::NdArray;

/// O(L^2) causal convolution.
inline std::vector<double> direct_causal(const std::vector<double>& u, const std::vector<double>& k) {
  std::vector<double> y(u.size(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) y[i] += k[j] * u[i - j];
  return y;
}

/// Runs the ZOH recurrence x_n = abar x_{n-1} + bbar u_n, y_n = Re(C x_n), from
/// the continuous parameters, without forming a kernel.
inline std::vector<double> ssm_recurrence(const diffad::SsmLayerParams& p, std::size_t h, const std::vector<double>& u) {
  using C = std::complex<double>;
  const std::size_t N = p.state_dim();
  const double dt = std::exp(p.log_step[h]);
  std::vector<C> abar(N), bbar(N), c(N), x(N, C(0.0, 0.0));
  for (std::size_t n = 0; n < N; ++n) {
    const std::size_t i = h * N + n;
    const C lambda(-std::exp(p.log_decay[i]), p.frequency[i]);
    abar[n] = std::exp(dt * lambda);
    bbar[n] = (abar[n] - 1.0) / lambda * C(p.b_re[i], p.b_im[i]);
    c[n] = C(p.c_re[i], p.c_im[i]);
  }
  std::vector<double> y(u.size());
  for (std::size_t t = 0; t < u.size(); ++t) {
    double acc = p.skip[h] * u[t];
    for (std::size_t n = 0; n < N; ++n) {
      x[n] = abar[n] * x[n] + bbar[n] * u[t];
      acc += (c[n] * x[n]).real();
    }
    y[t] = acc;
  }
  return y;
}

/// Normalized relative error with a denominator floor, so coordinates whose
/// true gradient is ~0 are judged on absolute error instead.
inline double rel_err(double a, double b, double floor = 1e-4) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central finite difference of f with respect to element `index` of `x`.
inline double central_diff(NdArray& x, std::size_t index, const std::function<double()>& f, double step = 1e-6) {
  const double saved = x[index];
  x[index] = saved + step;
  const double up = f();
  x[index] = saved - step;
  const double down = f();
  x[index] = saved;
  return (up - down) / (2.0 * step);
}

struct GradCheck {
  double worst = 0.0;
  std::size_t checked = 0;
};

/// Compares analytic gradients of a scalar-valued graph against central
/// differences on `samples` random coordinates of each input.
/// build(tape, leaves) must return the scalar output.
inline GradCheck check_gradients(std::vector<NdArray>& inputs,
                                 const std::function<diffad::Var(diffad::Tape&, std::vector<diffad::Var>&)>& build,
                                 diffad::Rng& rng, std::size_t samples = 4) {
  diffad::Tape tape;
  std::vector<diffad::Var> leaves;
  for (const auto& x : inputs) leaves.push_back(tape.leaf(x));
  const diffad::Var out = build(tape, leaves);
  const auto grads = diffad::gradient_of_scalar(tape, out, leaves);
  auto evaluate = [&] {
    diffad::Tape t(false);
    std::vector<diffad::Var> ls;
    for (const auto& x : inputs) ls.push_back(t.constant(x));
    return build(t, ls).value().item();
  };
  GradCheck r;
  for (std::size_t a = 0; a < inputs.size(); ++a) {
    for (std::size_t s = 0; s < samples; ++s) {
      const std::size_t i = rng.uniform_int(0, inputs[a].size() - 1);
      const double numeric = central_diff(inputs[a], i, evaluate);
      r.worst = std::max(r.worst, rel_err(grads[a][i], numeric));
      ++r.checked;
    }
  }
  return r;
}

/// Precision/recall/F1 straight from their textbook definitions, with 0 for
/// an empty denominator.
struct Prf {
  double p, r, f1;
};
inline Prf textbook_prf(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
  const double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
  return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0};
}

/// Window count of a length-n sequence cut with window L and stride S.
inline std::size_t sliding_count(std::size_t n, std::size_t L, std::size_t S) { return n < L ? 0 : (n - L) / S + 1; }

/// Count by enumeration, independent of the closed form above.
inline std::size_t sliding_count_enum(std::size_t n, std::size_t L, std::size_t S) {
  std::size_t c = 0;
  for (std::size_t s = 0; s + L <= n; s += S) ++c;
  return c;
}

/// Population mean and std.
inline std::pair<double, double> pop_mean_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= double(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / double(v.size()))};
}

}  // namespace oracle
