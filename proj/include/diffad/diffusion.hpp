#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "diffad/adam.hpp"
#include "diffad/data.hpp"
#include "diffad/noise_predictor.hpp"
#include "diffad/rng.hpp"

namespace diffad {

/// Fixed linear DDPM schedule. Arrays are indexed by t-1 for t in [1, T].
struct NoiseSchedule {
  std::size_t steps = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  std::vector<double> beta;
  std::vector<double> alpha;      // 1 - beta
  std::vector<double> alpha_bar;  // running product of alpha
  std::vector<double> sigma;      // sqrt(beta)

  double beta_at(std::size_t t) const { return beta[t - 1]; }
  double alpha_at(std::size_t t) const { return alpha[t - 1]; }
  double alpha_bar_at(std::size_t t) const { return alpha_bar[t - 1]; }
  double sigma_at(std::size_t t) const { return sigma[t - 1]; }
  void check_step(std::size_t t) const;
};

NoiseSchedule build_linear_schedule(std::size_t steps, double beta_start, double beta_end);

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
NdArray forward_noise(const NdArray& x0, std::size_t t, const NdArray& eps, const NoiseSchedule& schedule);

/// The (t, eps) pair drawn for one training step; t is per window.
struct TrainingDraw {
  std::vector<std::size_t> steps;
  NdArray eps;
};

TrainingDraw draw_training_noise(Rng& rng, const Shape& batch_shape, std::size_t T);

/// Mean squared eps-prediction error for a given draw, differentiable in the
/// model parameters `leaves`. With a mask (forecasting), the observed prefix
/// of x_t is clamped to x0, the model sees (x0, mask) as context and only
/// unobserved points enter the mean.
Var diffusion_loss(Tape& tape, const NoisePredictor& model, std::span<const Var> leaves, const WindowBatch& batch,
                   const TrainingDraw& draw, const NoiseSchedule& schedule);

struct TrainingStepResult {
  double loss = 0.0;
  double grad_norm = 0.0;
  TrainingDraw draw;
};

/// Draws t ~ U{1..T}, eps ~ N(0, I) per window, evaluates the loss and applies
/// one Adam update to the model's parameters. On a non-finite loss nothing is
/// updated and NumericError names `batch_index`.
TrainingStepResult training_step(NoisePredictor& model, const WindowBatch& batch, const NoiseSchedule& schedule,
                                 Rng& rng, AdamState& state, const AdamConfig& config, std::size_t batch_index = 0);

/// x_{t-1} = (x_t - (1-alpha_t)/sqrt(1-alpha_bar_t) * eps_theta) / sqrt(alpha_t) + sigma_t z.
/// z must be all zero at t = 1.
NdArray reverse_step(const NoisePredictor& model, const NdArray& x_t, std::size_t t, const Conditioning& cond,
                     const NoiseSchedule& schedule, const NdArray& z);

struct DiffusionMode {
  WindowMode kind = WindowMode::reconstruction;
  std::size_t history = 0;
  /// Reconstruction noising depth; 0 means T (full noising).
  std::size_t noise_step = 0;

  static DiffusionMode reconstruction() { return {}; }
  static DiffusionMode forecasting(std::size_t h) { return {WindowMode::forecasting, h, 0}; }
};

/// Full t = T..1 reverse loop for windows [B,C,L]; one random stream per window.
/// Reconstruction noises the given windows to x_T; forecasting starts from
/// N(0, I) and clamps the first h steps to the given windows after every step.
NdArray sample(const NoisePredictor& model, const DiffusionMode& mode, const NdArray& windows,
               const NoiseSchedule& schedule, std::span<Rng> streams);

/// Single-window [C,L] convenience.
NdArray sample(const NoisePredictor& model, const DiffusionMode& mode, const NdArray& window,
               const NoiseSchedule& schedule, Rng& rng);

}  // namespace diffad
