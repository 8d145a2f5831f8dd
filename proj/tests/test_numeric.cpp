#include <doctest.h>

#include "diffad/adam.hpp"
#include "diffad/autodiff.hpp"
#include "diffad/fft.hpp"
#include "diffad/params.hpp"
#include "oracles.hpp"

using namespace diffad;

TEST_CASE("ndarray shape invariants") {
  NdArray a({2, 3}, 1.5);
  CHECK(a.size() == 6);
  CHECK(a.at(1, 2) == 1.5);
  CHECK_THROWS_AS(NdArray({2, 3}, std::vector<double>(5)), ShapeError);
  CHECK_THROWS_AS(NdArray({2, 0}), ShapeError);
  CHECK(a.reshaped({3, 2}).dim(0) == 3);
  CHECK_THROWS_AS(a.reshaped({4, 2}), ShapeError);
  a[3] = std::nan("");
  CHECK_FALSE(a.all_finite());
  CHECK_THROWS_AS(a.require_finite("test"), NumericError);
}

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(5), b(5), c(6);
  for (int i = 0; i < 10; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    CHECK(x != c.normal());
  }
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  Rng r(9);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
  for (int i = 0; i < 1000; ++i) {
    const auto v = r.uniform_int(3, 7);
    CHECK((v >= 3 && v <= 7));
  }
}

TEST_CASE("fft causal convolution matches the direct sum for L in 1..256") {
  Rng rng(11);
  double worst = 0.0;
  for (std::size_t L = 1; L <= 256; ++L) {
    std::vector<double> u(L), k(L), u2(L);
    for (std::size_t i = 0; i < L; ++i) {
      u[i] = rng.normal();
      k[i] = rng.normal();
      u2[i] = rng.normal();
    }
    const auto ref = oracle::direct_causal(u, k);
    const auto got = fft::causal_convolve(u, k);
    fft::CausalConvolver conv(k);
    std::vector<double> a(L), b(L);
    conv.apply(u, a, u2, b);
    const auto ref2 = oracle::direct_causal(u2, k);
    for (std::size_t i = 0; i < L; ++i) {
      worst = std::max({worst, std::abs(ref[i] - got[i]), std::abs(ref[i] - a[i]), std::abs(ref2[i] - b[i])});
    }
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("fft round trip and impulse") {
  for (std::size_t n : {1u, 2u, 8u, 64u}) {
    auto plan = fft::plan_for(n);
    std::vector<fft::Complex> x(n, 0.0);
    x[0] = 1.0;
    plan->transform(x, false);
    for (auto v : x) CHECK(std::abs(v - fft::Complex(1.0, 0.0)) < 1e-14);
    plan->transform(x, true);
    CHECK(std::abs(x[0] - fft::Complex(1.0, 0.0)) < 1e-14);
  }
  CHECK(fft::next_pow2(5) == 8);
  CHECK(fft::next_pow2(8) == 8);
}

namespace {

NdArray randn(Rng& r, Shape s, double scale = 1.0) {
  NdArray a = r.normal_array(s);
  for (auto& v : a.values()) v *= scale;
  return a;
}

void expect_grad(std::vector<NdArray> inputs, const std::function<Var(Tape&, std::vector<Var>&)>& f,
                 std::uint64_t seed = 1) {
  Rng rng(seed);
  const auto r = oracle::check_gradients(inputs, f, rng, 6);
  CHECK(r.worst <= 1e-4);
}

}  // namespace

TEST_CASE("autodiff primitives match finite differences") {
  Rng r(3);
  const NdArray a = randn(r, {3, 4}), b = randn(r, {3, 4}), w = randn(r, {4, 2});
  auto sq = [](Var v) { return ad::sum(ad::mul(v, v)); };
  SUBCASE("add sub mul scale") {
    expect_grad({a, b}, [&](Tape&, auto& v) { return sq(ad::add(ad::mul(v[0], v[1]), ad::scale(ad::sub(v[0], v[1]), 0.3))); });
  }
  SUBCASE("matmul") { expect_grad({a, w}, [&](Tape&, auto& v) { return sq(ad::matmul(v[0], v[1])); }); }
  SUBCASE("activations") {
    expect_grad({a}, [&](Tape&, auto& v) { return sq(ad::tanh(v[0])); });
    expect_grad({a}, [&](Tape&, auto& v) { return sq(ad::sigmoid(v[0])); });
    expect_grad({a}, [&](Tape&, auto& v) { return sq(ad::silu(v[0])); });
    expect_grad({a}, [&](Tape&, auto& v) { return ad::sum(ad::exp(ad::scale(v[0], 0.5))); });
    expect_grad({a}, [&](Tape&, auto& v) { return ad::sum(ad::log(ad::add(ad::mul(v[0], v[0]), ad::exp(v[0])))); });
    expect_grad({a}, [&](Tape&, auto& v) { return sq(ad::relu(v[0])); });
  }
  SUBCASE("shape ops") {
    expect_grad({a}, [&](Tape&, auto& v) { return sq(ad::slice(v[0], 1, 1, 3)); });
    expect_grad({a, b}, [&](Tape&, auto& v) {
      std::vector<Var> parts{v[0], v[1]};
      return sq(ad::concat(parts, 0));
    });
    const NdArray row = randn(r, {1, 4});
    expect_grad({row, a}, [&](Tape&, auto& v) { return sq(ad::mul(ad::broadcast_to(v[0], {3, 4}), v[1])); });
    expect_grad({a}, [&](Tape&, auto& v) { return sq(ad::reshape(v[0], {2, 6})); });
    expect_grad({a}, [&](Tape&, auto& v) { return ad::mul(ad::mean(v[0]), ad::mean(v[0])); });
  }
  SUBCASE("conv1d dilated and pointwise") {
    const NdArray x = randn(r, {2, 3, 9}), k3 = randn(r, {4, 3, 3}), k1 = randn(r, {4, 3, 1});
    expect_grad({x, k3}, [&](Tape&, auto& v) { return sq(ad::conv1d(v[0], v[1], 2)); });
    expect_grad({x, k1}, [&](Tape&, auto& v) { return sq(ad::conv1d(v[0], v[1], 1)); });
  }
  SUBCASE("causal_conv") {
    const NdArray u = randn(r, {2, 3, 17}), k = randn(r, {3, 17});
    expect_grad({u, k}, [&](Tape&, auto& v) { return sq(ad::causal_conv(v[0], v[1])); });
  }
}

TEST_CASE("autodiff graph contracts") {
  Tape t;
  Var a = t.leaf(NdArray({2}, 1.0));
  Var c = t.constant(NdArray({2}, 2.0));
  Var unused = t.leaf(NdArray({3}, 1.0));
  Var y = ad::sum(ad::mul(a, c));
  std::vector<Var> ps{a, unused};
  const auto g = gradient_of_scalar(t, y, ps);
  CHECK(g[0][0] == 2.0);
  CHECK(g[1].shape() == Shape{3});
  CHECK(g[1][0] == 0.0);
  CHECK_THROWS_AS(ad::add(a, unused), ShapeError);
  CHECK_THROWS(t.backward(a));  // not a scalar
  Tape values_only(false);
  Var z = ad::sum(values_only.leaf(NdArray({2}, 3.0)));
  CHECK(z.value().item() == 6.0);
  CHECK_THROWS(values_only.backward(z));
}

TEST_CASE("adam matches a hand-computed first step") {
  std::vector<NdArray> params{NdArray({2}, std::vector<double>{1.0, -2.0})};
  std::vector<NdArray> grads{NdArray({2}, std::vector<double>{0.5, -4.0})};
  AdamState st = AdamState::for_params(params);
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  adam_step(params, grads, st, cfg);
  // Bias-corrected first step moves each coordinate by lr * g/(|g| + eps/sqrt(1-b2)).
  const double e = 1e-8;
  CHECK(params[0][0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + e)).epsilon(1e-12));
  CHECK(params[0][1] == doctest::Approx(-2.0 + 0.1 * 4.0 / (4.0 + e)).epsilon(1e-12));
  CHECK(st.step == 1);
  // second step with the same gradient: m_hat = g, v_hat = g^2
  adam_step(params, grads, st, cfg);
  CHECK(params[0][0] == doctest::Approx(1.0 - 0.2).epsilon(1e-7));
  cfg.clip_norm = 1.0;
  std::vector<NdArray> big{NdArray({2}, std::vector<double>{3.0, 4.0})};
  AdamState s2 = AdamState::for_params(params);
  CHECK(adam_step(params, big, s2, cfg) == doctest::Approx(5.0));
  grads[0][0] = std::nan("");
  CHECK_THROWS_AS(adam_step(params, grads, st, cfg), NumericError);
}

TEST_CASE("param set order and lookups") {
  ParamSet ps;
  ps.add("b", NdArray({2}));
  ps.add("a", NdArray({3}));
  CHECK(ps.names()[0] == "b");
  CHECK(ps.index_of("a") == 1);
  CHECK(ps.scalar_count() == 5);
  CHECK_THROWS(ps.add("a", NdArray({1})));
  CHECK_THROWS(ps.index_of("zz"));
}
