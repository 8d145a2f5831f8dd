#include "diffad/diffusion.hpp"

#include <cmath>
#include <string>

namespace diffad {

void NoiseSchedule::check_step(std::size_t t) const {
  if (t < 1 || t > steps) {
    throw std::out_of_range("diffusion step " + std::to_string(t) + " outside [1, " + std::to_string(steps) + "]");
  }
}

NoiseSchedule build_linear_schedule(std::size_t steps, double beta_start, double beta_end) {
  if (steps < 1) throw std::invalid_argument("schedule needs T >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw std::invalid_argument("schedule needs 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.steps = steps;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  double prod = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    const double b = i + 1 == steps && steps > 1 ? beta_end : beta_start + (beta_end - beta_start) * frac;
    s.beta.push_back(b);
    s.alpha.push_back(1.0 - b);
    prod *= 1.0 - b;
    s.alpha_bar.push_back(prod);
    s.sigma.push_back(std::sqrt(b));
  }
  return s;
}

namespace {

// Per-window forward noising of [B,C,L] with steps[b].
NdArray noise_windows(const NdArray& x0, std::span<const std::size_t> steps, const NdArray& eps,
                      const NoiseSchedule& schedule) {
  if (x0.shape() != eps.shape()) {
    throw ShapeError("forward_noise: x0 " + shape_string(x0.shape()) + " vs eps " + shape_string(eps.shape()));
  }
  const std::size_t per = x0.size() / steps.size();
  NdArray xt(x0.shape());
  for (std::size_t b = 0; b < steps.size(); ++b) {
    schedule.check_step(steps[b]);
    const double ab = schedule.alpha_bar_at(steps[b]);
    const double a = std::sqrt(ab), s = std::sqrt(1.0 - ab);
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) xt[i] = a * x0[i] + s * eps[i];
  }
  return xt;
}

}  // namespace

NdArray forward_noise(const NdArray& x0, std::size_t t, const NdArray& eps, const NoiseSchedule& schedule) {
  const std::size_t step[] = {t};
  return noise_windows(x0, step, eps, schedule);
}

TrainingDraw draw_training_noise(Rng& rng, const Shape& batch_shape, std::size_t T) {
  TrainingDraw d;
  for (std::size_t b = 0; b < batch_shape[0]; ++b) d.steps.push_back(static_cast<std::size_t>(rng.uniform_int(1, T)));
  d.eps = rng.normal_array(batch_shape);
  return d;
}

Var diffusion_loss(Tape& tape, const NoisePredictor& model, std::span<const Var> leaves, const WindowBatch& batch,
                   const TrainingDraw& draw, const NoiseSchedule& schedule) {
  const NdArray& x0 = batch.data;
  if (draw.steps.size() != batch.size() || draw.eps.shape() != x0.shape()) {
    throw ShapeError("training draw does not match batch " + shape_string(x0.shape()));
  }
  NdArray xt = noise_windows(x0, draw.steps, draw.eps, schedule);
  Conditioning cond = Conditioning::none(x0.shape());
  NdArray weight;
  double count = static_cast<double>(x0.size());
  if (batch.mask) {
    const NdArray& m = *batch.mask;
    if (m.shape() != x0.shape()) throw ShapeError("batch mask shape mismatch");
    weight = NdArray(x0.shape());
    count = 0.0;
    for (std::size_t i = 0; i < xt.size(); ++i) {
      xt[i] = xt[i] * (1.0 - m[i]) + x0[i] * m[i];
      weight[i] = 1.0 - m[i];
      count += weight[i];
    }
    if (count == 0.0) throw std::invalid_argument("mask leaves no target points");
    cond = Conditioning{x0, m};
  }
  Var pred = model.predict(tape, leaves, tape.constant(std::move(xt)), draw.steps, cond);
  Var diff = ad::sub(tape.constant(draw.eps), pred);
  Var sq = ad::mul(diff, diff);
  if (batch.mask) sq = ad::mul(sq, tape.constant(std::move(weight)));
  return ad::scale(ad::sum(sq), 1.0 / count);
}

TrainingStepResult training_step(NoisePredictor& model, const WindowBatch& batch, const NoiseSchedule& schedule,
                                 Rng& rng, AdamState& state, const AdamConfig& config, std::size_t batch_index) {
  TrainingStepResult r;
  r.draw = draw_training_noise(rng, batch.data.shape(), schedule.steps);
  Tape tape;
  ParamSet& params = model.parameters();
  const std::vector<Var> leaves = params.bind(tape);
  Var loss;
  try {
    loss = diffusion_loss(tape, model, leaves, batch, r.draw, schedule);
  } catch (const NumericError& e) {
    throw NumericError("training batch " + std::to_string(batch_index) + ": " + e.what());
  }
  r.loss = loss.value().item();
  if (!std::isfinite(r.loss)) {
    throw NumericError("non-finite training loss at batch " + std::to_string(batch_index));
  }
  const std::vector<NdArray> grads = gradient_of_scalar(tape, loss, leaves);
  for (const auto& g : grads) {
    if (!g.all_finite()) throw NumericError("non-finite gradient at batch " + std::to_string(batch_index));
  }
  if (state.m.empty()) state = AdamState::for_params(params.values());
  r.grad_norm = adam_step(params.values(), grads, state, config);
  return r;
}

NdArray reverse_step(const NoisePredictor& model, const NdArray& x_t, std::size_t t, const Conditioning& cond,
                     const NoiseSchedule& schedule, const NdArray& z) {
  schedule.check_step(t);
  if (z.shape() != x_t.shape()) throw ShapeError("reverse_step: z shape mismatch");
  if (t == 1) {
    for (double v : z.values()) {
      if (v != 0.0) throw std::invalid_argument("reverse_step: z must be zero at t = 1");
    }
  }
  const std::vector<std::size_t> steps(x_t.dim(0), t);
  const NdArray eps = model.predict(x_t, steps, cond);
  const double a = schedule.alpha_at(t);
  const double coef = (1.0 - a) / std::sqrt(1.0 - schedule.alpha_bar_at(t));
  const double inv_sqrt_a = 1.0 / std::sqrt(a);
  const double sigma = schedule.sigma_at(t);
  NdArray out(x_t.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = inv_sqrt_a * (x_t[i] - coef * eps[i]) + sigma * z[i];
  out.require_finite("reverse_step at t=" + std::to_string(t));
  return out;
}

namespace {

void fill_normal(NdArray& dst, std::span<Rng> streams) {
  const std::size_t per = dst.size() / streams.size();
  for (std::size_t b = 0; b < streams.size(); ++b) {
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) dst[i] = streams[b].normal();
  }
}

}  // namespace

NdArray sample(const NoisePredictor& model, const DiffusionMode& mode, const NdArray& windows,
               const NoiseSchedule& schedule, std::span<Rng> streams) {
  if (windows.rank() != 3) throw ShapeError("sample: windows must be [B,C,L]");
  const std::size_t batch = windows.dim(0), len = windows.dim(2);
  if (streams.size() != batch) throw std::invalid_argument("sample: one random stream per window required");
  const Shape shape = windows.shape();
  NdArray x(shape);
  Conditioning cond = Conditioning::none(shape);
  std::size_t start = schedule.steps;

  if (mode.kind == WindowMode::reconstruction) {
    if (mode.history != 0) throw std::invalid_argument("reconstruction mode takes no history");
    if (mode.noise_step != 0) {
      schedule.check_step(mode.noise_step);
      start = mode.noise_step;
    }
    NdArray eps(shape);
    fill_normal(eps, streams);
    x = forward_noise(windows, start, eps, schedule);
  } else {
    if (mode.history == 0 || mode.history >= len) {
      throw std::invalid_argument("forecasting needs 0 < h < L (h=" + std::to_string(mode.history) +
                                  ", L=" + std::to_string(len) + ")");
    }
    WindowBatch wb;
    wb.data = windows;
    wb.length = len;
    wb.origins.resize(batch);
    ForecastSplit split = split_history_target(wb, mode.history);
    cond = std::move(split.conditioning);
    fill_normal(x, streams);
  }

  auto clamp = [&](NdArray& v) {
    if (mode.kind != WindowMode::forecasting) return;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (cond.mask[i] != 0.0) v[i] = windows[i];
    }
  };
  clamp(x);
  NdArray z(shape);
  for (std::size_t t = start; t >= 1; --t) {
    if (t > 1) {
      fill_normal(z, streams);
    } else {
      z.fill(0.0);
    }
    x = reverse_step(model, x, t, cond, schedule, z);
    clamp(x);
  }
  return x;
}

NdArray sample(const NoisePredictor& model, const DiffusionMode& mode, const NdArray& window,
               const NoiseSchedule& schedule, Rng& rng) {
  if (window.rank() != 2) throw ShapeError("sample: single window must be [C,L]");
  Shape s = {1, window.dim(0), window.dim(1)};
  std::span<Rng> one(&rng, 1);
  return sample(model, mode, window.reshaped(s), schedule, one).reshaped(window.shape());
}

}  // namespace diffad
