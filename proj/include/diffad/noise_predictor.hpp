#pragma once

#include <span>

#include "diffad/params.hpp"

namespace diffad {

/// Side information for the noise predictor. Both arrays are [B,C,L];
/// mask is 1 where the context value is observed. An all-zero pair means
/// "no conditioning" (reconstruction mode).
struct Conditioning {
  NdArray context;
  NdArray mask;

  static Conditioning none(const Shape& shape) { return {NdArray(shape), NdArray(shape)}; }
};

/// eps_theta(x_t, t, context): anything that predicts the injected noise.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;

  /// Differentiable prediction for a batch x_t [B,C,L] with one diffusion
  /// step per window. `params` are this model's parameters bound on `tape`.
  virtual Var predict(Tape& tape, std::span<const Var> params, Var x_t, std::span<const std::size_t> steps,
                      const Conditioning& cond) const = 0;

  virtual ParamSet& parameters() = 0;
  virtual const ParamSet& parameters() const = 0;

  /// Non-recording evaluation.
  NdArray predict(const NdArray& x_t, std::span<const std::size_t> steps, const Conditioning& cond) const;
};

}  // namespace diffad
