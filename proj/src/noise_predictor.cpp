#include "diffad/noise_predictor.hpp"

namespace diffad {

NdArray NoisePredictor::predict(const NdArray& x_t, std::span<const std::size_t> steps,
                                const Conditioning& cond) const {
  Tape tape(false);
  const std::vector<Var> leaves = parameters().bind(tape);
  return predict(tape, leaves, tape.constant(x_t), steps, cond).value();
}

}  // namespace diffad
