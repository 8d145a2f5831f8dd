#pragma once

// Small fixtures shared by the unit tests and the acceptance binary.

#include <cmath>
#include <numbers>

#include "diffad/denoiser.hpp"
#include "diffad/diffusion.hpp"
#include "oracles.hpp"

namespace testsupport {

using namespace diffad;

/// Predictor that always returns a fixed array, e.g. the true noise.
class FixedNoise final : public NoisePredictor {
 public:
  explicit FixedNoise(NdArray eps) : eps_(std::move(eps)) {}
  using NoisePredictor::predict;
  Var predict(Tape& tape, std::span<const Var>, Var, std::span<const std::size_t>, const Conditioning&) const override {
    return tape.constant(eps_);
  }
  ParamSet& parameters() override { return params_; }
  const ParamSet& parameters() const override { return params_; }

 private:
  NdArray eps_;
  ParamSet params_;
};

inline SsmLayerParams random_ssm_layer(Rng& rng, std::size_t h, std::size_t n) {
  SsmLayerParams p{NdArray({h, n}), NdArray({h, n}), NdArray({h}), NdArray({h, n}),
                   NdArray({h, n}), NdArray({h, n}), NdArray({h, n}), NdArray({h})};
  for (std::size_t i = 0; i < h * n; ++i) {
    p.log_decay[i] = rng.uniform(-3.0, 0.5);
    p.frequency[i] = rng.uniform(0.0, std::numbers::pi * double(n));
    p.b_re[i] = rng.normal();
    p.b_im[i] = rng.normal();
    p.c_re[i] = rng.normal();
    p.c_im[i] = rng.normal();
  }
  for (std::size_t i = 0; i < h; ++i) {
    p.log_step[i] = rng.uniform(std::log(1e-3), std::log(0.5));
    p.skip[i] = rng.normal();
  }
  return p;
}

inline ModelConfig tiny_config(Backbone bb, std::size_t features, std::size_t length) {
  ModelConfig c;
  c.backbone = bb;
  c.features = features;
  c.length = length;
  c.channels = 4;
  c.blocks = 2;
  c.state_dim = 3;
  c.embed_dim = 8;
  c.mlp_hidden = 10;
  c.kernel_size = 3;
  c.dilation_cycle = 2;
  return c;
}

/// Loss gradient vs central differences on `samples` random coordinates of
/// every parameter array, at a randomly perturbed initialization.
inline oracle::GradCheck loss_gradient_check(const ModelConfig& cfg, std::uint64_t seed, Rng& rng, WindowMode mode,
                                             std::size_t samples) {
  ModelParams mp = init_model(cfg, seed);
  for (auto& a : mp.params.values())
    for (auto& v : a.values()) v += 0.05 * rng.normal();
  Denoiser model(std::move(mp));
  const NoiseSchedule s = build_linear_schedule(30, 1e-3, 0.1);
  WindowBatch batch;
  batch.data = rng.normal_array({2, cfg.features, cfg.length});
  batch.length = cfg.length;
  batch.origins.resize(2);
  if (mode == WindowMode::forecasting) attach_history(batch, cfg.length / 2);
  const TrainingDraw draw = draw_training_noise(rng, batch.data.shape(), s.steps);

  Tape tape;
  const auto leaves = model.parameters().bind(tape);
  const Var loss = diffusion_loss(tape, model, leaves, batch, draw, s);
  const auto grads = gradient_of_scalar(tape, loss, leaves);
  auto eval = [&] {
    Tape t(false);
    const auto ls = model.parameters().bind(t);
    return diffusion_loss(t, model, ls, batch, draw, s).value().item();
  };
  oracle::GradCheck r;
  auto& values = model.parameters().values();
  for (std::size_t a = 0; a < values.size(); ++a) {
    for (std::size_t k = 0; k < samples; ++k) {
      const std::size_t i = rng.uniform_int(0, values[a].size() - 1);
      const double numeric = oracle::central_diff(values[a], i, eval);
      r.worst = std::max(r.worst, oracle::rel_err(grads[a][i], numeric));
      ++r.checked;
    }
  }
  return r;
}

}  // namespace testsupport
