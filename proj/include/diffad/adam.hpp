#pragma once

#include <cstdint>
#include <vector>

#include "diffad/ndarray.hpp"

namespace diffad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global gradient-norm clip applied before the update; <= 0 disables it.
  double clip_norm = 0.0;
};

struct AdamState {
  std::vector<NdArray> m;
  std::vector<NdArray> v;
  std::uint64_t step = 0;

  /// Zero moments shaped like `params`.
  static AdamState for_params(const std::vector<NdArray>& params);
};

/// One bias-corrected Adam update, applied in place to `params` and `state`.
/// Returns the pre-clip global gradient norm.
double adam_step(std::vector<NdArray>& params, const std::vector<NdArray>& grads, AdamState& state,
                 const AdamConfig& config);

}  // namespace diffad
