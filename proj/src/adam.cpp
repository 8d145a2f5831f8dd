#include "diffad/adam.hpp"

#include <cmath>

namespace diffad {

AdamState AdamState::for_params(const std::vector<NdArray>& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.shape());
    s.v.emplace_back(p.shape());
  }
  return s;
}

double adam_step(std::vector<NdArray>& params, const std::vector<NdArray>& grads, AdamState& state,
                 const AdamConfig& config) {
  if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
    throw ShapeError("adam_step: parameter/gradient/state counts differ");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape& s = params[i].shape();
    if (grads[i].shape() != s || state.m[i].shape() != s || state.v[i].shape() != s) {
      throw ShapeError("adam_step: shape mismatch at parameter " + std::to_string(i) + ": " + shape_string(s) +
                       " vs gradient " + shape_string(grads[i].shape()));
    }
    for (double g : grads[i].values()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericError("adam_step: non-finite gradient");
  const double clip = (config.clip_norm > 0.0 && norm > config.clip_norm) ? config.clip_norm / norm : 1.0;

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i].data();
    const double* g = grads[i].data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    for (std::size_t j = 0; j < params[i].size(); ++j) {
      const double gj = g[j] * clip;
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * gj;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * gj * gj;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  }
  return norm;
}

}  // namespace diffad
