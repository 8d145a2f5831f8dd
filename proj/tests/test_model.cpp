#include <doctest.h>

#include "diffad/diffusion.hpp"
#include "diffad/fft.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace diffad;

TEST_CASE("ssm kernel convolution equals the recurrence for L in 1..256") {
  Rng rng(21);
  const SsmLayerParams layer = testsupport::random_ssm_layer(rng, 3, 8);
  double worst = 0.0;
  for (std::size_t L = 1; L <= 256; ++L) {
    const NdArray k = ssm_kernel(layer, L);
    for (std::size_t h = 0; h < layer.channels(); ++h) {
      std::vector<double> u(L), kh(k.data() + h * L, k.data() + (h + 1) * L);
      for (auto& v : u) v = rng.normal();
      auto y = fft::causal_convolve(u, kh);
      const auto ref = oracle::ssm_recurrence(layer, h, u);
      for (std::size_t i = 0; i < L; ++i) worst = std::max(worst, std::abs(y[i] + layer.skip[h] * u[i] - ref[i]));
    }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("ssm discretization is stable and kernel gradient is correct") {
  Rng rng(4);
  SsmLayerParams layer = testsupport::random_ssm_layer(rng, 2, 4);
  CHECK(max_transition_magnitude(layer) < 1.0);
  // zero input gives zero output regardless of parameters
  const NdArray k = ssm_kernel(layer, 16);
  std::vector<double> zeros(16, 0.0), row(k.data(), k.data() + 16);
  for (double v : fft::causal_convolve(zeros, row)) CHECK(v == 0.0);

  std::vector<NdArray> in{layer.log_decay, layer.frequency, layer.log_step, layer.b_re,
                          layer.b_im,      layer.c_re,      layer.c_im};
  const NdArray weight = rng.normal_array({2, 12});
  Rng pick(8);
  const auto r = oracle::check_gradients(
      in,
      [&](Tape& t, std::vector<Var>& v) {
        Var kk = ad::ssm_kernel(v[0], v[1], v[2], v[3], v[4], v[5], v[6], 12);
        return ad::sum(ad::mul(kk, t.constant(weight)));
      },
      pick, 4);
  CHECK(r.worst <= 1e-4);
}

TEST_CASE("time embedding layout") {
  const NdArray e = time_embedding(0, 8);
  CHECK(e.size() == 8);
  CHECK(e[0] == 0.0);
  CHECK(e[1] == 1.0);
  const NdArray e5 = time_embedding(5, 8);
  CHECK(e5[0] == doctest::Approx(std::sin(5.0)));
  CHECK(e5[7] == doctest::Approx(std::cos(5.0 * std::pow(10000.0, -1.0))));
  CHECK(time_embedding(3, 8) != time_embedding(4, 8));
}

TEST_CASE("every backbone maps [B,C,L] to [B,C,L] and its loss gradient is correct") {
  for (Backbone bb : {Backbone::mlp, Backbone::dilated_conv, Backbone::ssm}) {
    CAPTURE(to_string(bb));
    const ModelConfig cfg = testsupport::tiny_config(bb, 2, 12);
    Denoiser model(init_model(cfg, 3));
    Rng rng(5);
    const NdArray x = rng.normal_array({3, 2, 12});
    const std::vector<std::size_t> steps{1, 7, 20};
    const NdArray eps = model.predict(x, steps, Conditioning::none(x.shape()));
    CHECK(eps.shape() == x.shape());
    CHECK(eps.all_finite());
    const auto g = testsupport::loss_gradient_check(cfg, 10, rng, WindowMode::reconstruction, 6);
    CHECK(g.worst <= 1e-4);
    const auto gf = testsupport::loss_gradient_check(cfg, 11, rng, WindowMode::forecasting, 6);
    CHECK(gf.worst <= 1e-4);
  }
}

TEST_CASE("model config validation") {
  ModelConfig c = testsupport::tiny_config(Backbone::ssm, 2, 12);
  c.channels = 0;
  CHECK_THROWS(c.validate());
  c = testsupport::tiny_config(Backbone::dilated_conv, 2, 12);
  c.kernel_size = 2;
  CHECK_THROWS(c.validate());
  CHECK(parse_backbone("ssm") == Backbone::ssm);
  CHECK_THROWS(parse_backbone("transformer"));
}

TEST_CASE("linear schedule properties over generated schedules") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = rng.uniform_int(1, 1000);
    const double b0 = rng.uniform(1e-6, 0.05);
    const double b1 = b0 + rng.uniform(0.0, 0.5);
    const NoiseSchedule s = build_linear_schedule(T, b0, b1);
    REQUIRE(s.alpha_bar.size() == T);
    double prev = 1.0;
    for (std::size_t t = 1; t <= T; ++t) {
      const double ab = s.alpha_bar_at(t);
      CHECK((ab > 0.0 && ab < 1.0));
      CHECK(ab < prev);
      CHECK(s.sigma_at(t) == std::sqrt(s.beta_at(t)));
      prev = ab;
    }
  }
  const NoiseSchedule d = build_linear_schedule(200, 1e-4, 0.02);
  CHECK(d.beta_at(1) == 1e-4);
  CHECK(d.beta_at(200) == 0.02);
  CHECK_THROWS(build_linear_schedule(0, 1e-4, 0.02));
  CHECK_THROWS(build_linear_schedule(10, 0.02, 1e-4));
  CHECK_THROWS(build_linear_schedule(10, 1e-4, 1.0));
  CHECK_THROWS_AS(d.check_step(0), std::out_of_range);
  CHECK_THROWS_AS(d.check_step(201), std::out_of_range);
}

TEST_CASE("forward noise moments match the closed form") {
  const NoiseSchedule s = build_linear_schedule(200, 1e-4, 0.02);
  Rng rng(2);
  const std::size_t n = 200000;
  const NdArray x0({n}, 0.0);
  for (std::size_t t : {1u, 50u, 200u}) {
    const NdArray xt = forward_noise(x0, t, rng.normal_array({n}), s);
    std::vector<double> v(xt.values().begin(), xt.values().end());
    const auto [m, sd] = oracle::pop_mean_std(v);
    CHECK(std::abs(sd * sd / (1.0 - s.alpha_bar_at(t)) - 1.0) < 0.02);
  }
  const NdArray ones({4}, 1.0), zero({4}, 0.0);
  CHECK(forward_noise(ones, 10, zero, s)[0] == doctest::Approx(std::sqrt(s.alpha_bar_at(10))));
}

TEST_CASE("t=1 reverse step with the true noise recovers x0") {
  const NoiseSchedule s = build_linear_schedule(200, 1e-4, 0.02);
  Rng rng(6);
  const NdArray x0 = rng.normal_array({2, 3, 10});
  const NdArray eps = rng.normal_array(x0.shape());
  const NdArray x1 = forward_noise(x0, 1, eps, s);
  testsupport::FixedNoise oracle_model(eps);
  const NdArray back = reverse_step(oracle_model, x1, 1, Conditioning::none(x0.shape()), s, NdArray(x0.shape()));
  CHECK(max_abs_diff(back, x0) <= 1e-12);
  CHECK_THROWS(reverse_step(oracle_model, x1, 1, Conditioning::none(x0.shape()), s, NdArray(x0.shape(), 1.0)));
}

TEST_CASE("diffusion loss is zero for the true noise and ignores observed points") {
  const NoiseSchedule s = build_linear_schedule(50, 1e-4, 0.05);
  Rng rng(7);
  WindowBatch batch;
  batch.data = rng.normal_array({2, 2, 10});
  batch.length = 10;
  batch.origins.resize(2);
  TrainingDraw draw = draw_training_noise(rng, batch.data.shape(), s.steps);
  {
    testsupport::FixedNoise m(draw.eps);
    Tape t(false);
    CHECK(diffusion_loss(t, m, {}, batch, draw, s).value().item() == 0.0);
  }
  attach_history(batch, 4);
  NdArray wrong = draw.eps;
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t l = 0; l < 4; ++l) wrong.at(b, c, l) += 5.0;
  testsupport::FixedNoise m(wrong);
  Tape t(false);
  CHECK(diffusion_loss(t, m, {}, batch, draw, s).value().item() == 0.0);
}

TEST_CASE("sampling is deterministic per stream and respects the observed prefix") {
  const ModelConfig cfg = testsupport::tiny_config(Backbone::ssm, 2, 12);
  Denoiser model(init_model(cfg, 1));
  const NoiseSchedule s = build_linear_schedule(10, 1e-3, 0.1);
  Rng rng(3);
  const NdArray w = rng.normal_array({2, 2, 12});
  auto run = [&](DiffusionMode mode, std::uint64_t seed) {
    std::vector<Rng> streams{Rng(seed), Rng(seed + 1)};
    return sample(model, mode, w, s, streams);
  };
  const NdArray a = run(DiffusionMode::reconstruction(), 1);
  CHECK(a == run(DiffusionMode::reconstruction(), 1));
  CHECK(a != run(DiffusionMode::reconstruction(), 5));
  CHECK(a.all_finite());
  const NdArray f = run(DiffusionMode::forecasting(5), 1);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t l = 0; l < 5; ++l) CHECK(f.at(b, c, l) == w.at(b, c, l));
  CHECK_THROWS(run(DiffusionMode::forecasting(12), 1));
  // a window sampled alone equals the same window sampled in a batch
  NdArray single({2, 12});
  std::copy_n(w.data(), 24, single.data());
  Rng r1(1);
  const NdArray alone = sample(model, DiffusionMode::reconstruction(), single, s, r1);
  for (std::size_t i = 0; i < 24; ++i) CHECK(alone[i] == a[i]);
}

TEST_CASE("training steps reduce the loss on a fixed batch") {
  const ModelConfig cfg = testsupport::tiny_config(Backbone::ssm, 1, 16);
  Denoiser model(init_model(cfg, 2));
  const NoiseSchedule s = build_linear_schedule(20, 1e-3, 0.2);
  WindowBatch batch;
  batch.data = NdArray({4, 1, 16});
  for (std::size_t b = 0; b < 4; ++b)
    for (std::size_t l = 0; l < 16; ++l) batch.data.at(b, 0, l) = std::sin(0.4 * double(l + b));
  batch.length = 16;
  batch.origins.resize(4);
  AdamState st;
  AdamConfig ac;
  ac.learning_rate = 3e-3;
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 120; ++i) {
    Rng rng(derive_seed(9, i));
    const double l = training_step(model, batch, s, rng, st, ac, i).loss;
    if (i < 20) first += l;
    if (i >= 100) last += l;
  }
  CHECK(last < first);
  CHECK(st.step == 120);
}
