#pragma once

#include <cstdint>
#include <string>

#include "diffad/noise_predictor.hpp"
#include "diffad/ssm.hpp"

namespace diffad {

enum class Backbone { mlp, dilated_conv, ssm };

std::string to_string(Backbone b);
Backbone parse_backbone(const std::string& s);

struct ModelConfig {
  Backbone backbone = Backbone::ssm;
  std::size_t features = 1;   // C
  std::size_t length = 100;   // L
  std::size_t channels = 32;  // residual channels H
  std::size_t blocks = 4;
  std::size_t state_dim = 16;  // N, ssm backbone
  std::size_t embed_dim = 64;  // sinusoidal time-embedding width
  std::size_t mlp_hidden = 256;
  std::size_t kernel_size = 3;     // dilated_conv backbone
  std::size_t dilation_cycle = 4;  // dilations 1,2,4,.. restart every cycle blocks

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Architecture plus every learnable array; parameter order is declaration order.
struct ModelParams {
  ModelConfig config;
  ParamSet params;
};

/// Raw sinusoidal embedding of a diffusion step: entry 2i is sin(t*f_i) and
/// 2i+1 is cos(t*f_i) with f_i = 10000^(-i/(dim/2-1)).
NdArray time_embedding(std::size_t step, std::size_t dim);

ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

/// eps_hat [B,C,L] for x_t [B,C,L]. Conditioning is fed as
/// concat(context * mask, mask) and joins after the first sequence layer.
Var denoiser_forward(Tape& tape, const ModelParams& model, std::span<const Var> leaves, Var x_t,
                     std::span<const std::size_t> steps, const Conditioning& cond);

/// SSM layer `which` (1 or 2) of residual block `block` of an ssm backbone.
SsmLayerParams ssm_layer_params(const ModelParams& model, std::size_t block, int which);

/// Largest discretized |abar| across every SSM layer (0 for other backbones).
double max_transition_magnitude(const ModelParams& model);

class Denoiser final : public NoisePredictor {
 public:
  explicit Denoiser(ModelParams model) : model_(std::move(model)) {}

  using NoisePredictor::predict;
  Var predict(Tape& tape, std::span<const Var> params, Var x_t, std::span<const std::size_t> steps,
              const Conditioning& cond) const override {
    return denoiser_forward(tape, model_, params, x_t, steps, cond);
  }
  ParamSet& parameters() override { return model_.params; }
  const ParamSet& parameters() const override { return model_.params; }

  const ModelParams& model() const { return model_; }
  const ModelConfig& config() const { return model_.config; }

 private:
  ModelParams model_;
};

}  // namespace diffad
