#pragma once

#include <complex>
#include <vector>

#include "diffad/autodiff.hpp"

namespace diffad {

/// Diagonal state-space layer over H channels with N complex states each.
/// Continuous transition lambda = -exp(log_decay) + i*frequency, so the real
/// part is negative for any parameter value; steps are exp(log_step).
struct SsmLayerParams {
  NdArray log_decay;  // [H,N]
  NdArray frequency;  // [H,N]
  NdArray log_step;   // [H]
  NdArray b_re, b_im;  // [H,N]
  NdArray c_re, c_im;  // [H,N]
  NdArray skip;        // [H]  (D term)

  std::size_t channels() const { return log_decay.dim(0); }
  std::size_t state_dim() const { return log_decay.dim(1); }
};

/// Zero-order-hold discretization: abar = exp(dt*lambda),
/// bbar = (abar - 1) / lambda * B. Entries are row-major [H,N].
struct DiscreteSsm {
  std::size_t channels = 0;
  std::size_t state_dim = 0;
  std::vector<std::complex<double>> abar;
  std::vector<std::complex<double>> bbar;
  std::vector<std::complex<double>> c;
  std::vector<double> skip;
};

DiscreteSsm discretize_zoh(const SsmLayerParams& layer);

/// kernel[h][j] = Re(sum_n C[h,n] * abar[h,n]^j * bbar[h,n]); returns [H,L].
/// Throws NumericError if any |abar| >= 1.
NdArray ssm_kernel(const DiscreteSsm& ssm, std::size_t length);
NdArray ssm_kernel(const SsmLayerParams& layer, std::size_t length);

/// Largest |abar| over all states.
double max_transition_magnitude(const SsmLayerParams& layer);

namespace ad {

/// Differentiable ZOH kernel generation; arguments as in SsmLayerParams.
Var ssm_kernel(Var log_decay, Var frequency, Var log_step, Var b_re, Var b_im, Var c_re, Var c_im,
               std::size_t length);

}  // namespace ad
}  // namespace diffad
