#include "diffad/denoiser.hpp"

#include <cmath>
#include <numbers>

#include "diffad/rng.hpp"

namespace diffad {

std::string to_string(Backbone b) {
  switch (b) {
    case Backbone::mlp: return "mlp";
    case Backbone::dilated_conv: return "dilated_conv";
    case Backbone::ssm: return "ssm";
  }
  return "?";
}

Backbone parse_backbone(const std::string& s) {
  if (s == "mlp") return Backbone::mlp;
  if (s == "dilated_conv" || s == "conv") return Backbone::dilated_conv;
  if (s == "ssm") return Backbone::ssm;
  throw std::invalid_argument("unknown backbone '" + s + "' (expected mlp, dilated_conv or ssm)");
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw std::invalid_argument(std::string("model config: ") + what + " must be positive");
  };
  positive(features, "features");
  positive(length, "length");
  positive(channels, "channels");
  positive(blocks, "blocks");
  positive(embed_dim, "embed_dim");
  if (embed_dim % 2) throw std::invalid_argument("model config: embed_dim must be even");
  if (backbone == Backbone::ssm) positive(state_dim, "state_dim");
  if (backbone == Backbone::mlp) positive(mlp_hidden, "mlp_hidden");
  if (backbone == Backbone::dilated_conv) {
    positive(dilation_cycle, "dilation_cycle");
    if (kernel_size % 2 == 0) throw std::invalid_argument("model config: kernel_size must be odd");
  }
}

NdArray time_embedding(std::size_t step, std::size_t dim) {
  if (dim == 0 || dim % 2) throw std::invalid_argument("time embedding dimension must be even and positive");
  const std::size_t half = dim / 2;
  NdArray e({dim});
  for (std::size_t i = 0; i < half; ++i) {
    const double f = half > 1 ? std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half - 1))
                              : 1.0;
    const double arg = static_cast<double>(step) * f;
    e[2 * i] = std::sin(arg);
    e[2 * i + 1] = std::cos(arg);
  }
  return e;
}

namespace {

std::string block_prefix(std::size_t i) { return "block" + std::to_string(i) + "."; }

class Initializer {
 public:
  Initializer(ParamSet& set, std::uint64_t seed) : set_(set), rng_(seed) {}

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  void weight(const std::string& name, Shape shape, std::size_t fan_in, double gain = 1.0) {
    NdArray w(std::move(shape));
    const double bound = gain / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : w.values()) v = rng_.uniform(-bound, bound);
    set_.add(name, std::move(w));
  }
  void constant(const std::string& name, Shape shape, double value = 0.0) {
    set_.add(name, NdArray(std::move(shape), value));
  }
  void ssm(const std::string& prefix, std::size_t h, std::size_t n) {
    NdArray log_decay({h, n}, std::log(0.5)), freq({h, n}), log_step({h}), b_re({h, n}, 1.0), b_im({h, n}),
        c_re({h, n}), c_im({h, n}), skip({h}, 1.0);
    for (std::size_t c = 0; c < h; ++c) {
      log_step[c] = rng_.uniform(std::log(1e-3), std::log(1e-1));
      for (std::size_t s = 0; s < n; ++s) {
        freq[c * n + s] = std::numbers::pi * static_cast<double>(s);
        c_re[c * n + s] = rng_.normal() * std::sqrt(0.5);
        c_im[c * n + s] = rng_.normal() * std::sqrt(0.5);
      }
    }
    set_.add(prefix + "log_decay", std::move(log_decay));
    set_.add(prefix + "frequency", std::move(freq));
    set_.add(prefix + "log_step", std::move(log_step));
    set_.add(prefix + "b_re", std::move(b_re));
    set_.add(prefix + "b_im", std::move(b_im));
    set_.add(prefix + "c_re", std::move(c_re));
    set_.add(prefix + "c_im", std::move(c_im));
    set_.add(prefix + "skip", std::move(skip));
  }

 private:
  ParamSet& set_;
  Rng rng_;
};

// Time MLP width after the two learned layers.
std::size_t time_hidden(const ModelConfig& c) { return 2 * c.embed_dim; }

void init_time_mlp(Initializer& init, const ModelConfig& c) {
  const std::size_t e = c.embed_dim, th = time_hidden(c);
  init.weight("time.fc1.w", {e, th}, e);
  init.constant("time.fc1.b", {1, th});
  init.weight("time.fc2.w", {th, th}, th);
  init.constant("time.fc2.b", {1, th});
}

Var linear(const BoundParams& p, const std::string& name, Var x) {
  const Var w = p(name + ".w");
  const Var b = p(name + ".b");
  Var y = ad::matmul(x, w);
  return ad::add(y, ad::broadcast_to(b, y.shape()));
}

Var pointwise(const BoundParams& p, const std::string& name, Var x, std::size_t dilation = 1) {
  Var y = ad::conv1d(x, p(name + ".w"), dilation);
  return ad::add(y, ad::broadcast_to(p(name + ".b"), y.shape()));
}

// [B, 2E] time features after the shared two-layer MLP.
Var time_features(Tape& tape, const BoundParams& p, const ModelConfig& c, std::span<const std::size_t> steps) {
  NdArray raw({steps.size(), c.embed_dim});
  for (std::size_t b = 0; b < steps.size(); ++b) {
    const NdArray e = time_embedding(steps[b], c.embed_dim);
    std::copy(e.values().begin(), e.values().end(), raw.data() + b * c.embed_dim);
  }
  Var h = ad::silu(linear(p, "time.fc1", tape.constant(std::move(raw))));
  return ad::silu(linear(p, "time.fc2", h));
}

// [B,H] time projection broadcast over length: [B,H,L].
Var time_bias(const BoundParams& p, const std::string& name, Var tfeat, std::size_t length) {
  Var v = linear(p, name, tfeat);
  const std::size_t b = v.shape()[0], h = v.shape()[1];
  return ad::broadcast_to(ad::reshape(v, {b, h, 1}), {b, h, length});
}

Var ssm_layer(const BoundParams& p, const std::string& prefix, Var u) {
  const std::size_t len = u.shape()[2], h = u.shape()[1];
  Var k = ad::ssm_kernel(p(prefix + "log_decay"), p(prefix + "frequency"), p(prefix + "log_step"),
                         p(prefix + "b_re"), p(prefix + "b_im"), p(prefix + "c_re"), p(prefix + "c_im"), len);
  Var y = ad::causal_conv(u, k);
  Var d = ad::broadcast_to(ad::reshape(p(prefix + "skip"), {h, 1}), u.shape());
  return ad::add(y, ad::mul(d, u));
}

Var gated(Var h, std::size_t half) {
  Var a = ad::slice(h, 1, 0, half);
  Var b = ad::slice(h, 1, half, 2 * half);
  return ad::mul(ad::tanh(a), ad::sigmoid(b));
}

NdArray conditioning_input(const Conditioning& cond) {
  const Shape& s = cond.context.shape();
  const std::size_t batch = s[0], feats = s[1], len = s[2];
  NdArray out({batch, 2 * feats, len});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < feats; ++c) {
      for (std::size_t l = 0; l < len; ++l) {
        const double m = cond.mask.at(b, c, l);
        out.at(b, c, l) = cond.context.at(b, c, l) * m;
        out.at(b, feats + c, l) = m;
      }
    }
  }
  return out;
}

Var residual_stack(Tape& tape, const BoundParams& p, const ModelConfig& c, Var x_t, Var tfeat, Var cond) {
  const std::size_t h = c.channels, len = c.length;
  Var x = ad::relu(pointwise(p, "input", x_t));
  Var skip_sum;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (std::size_t i = 0; i < c.blocks; ++i) {
    const std::string pre = block_prefix(i);
    Var hcur = ad::add(x, time_bias(p, pre + "time", tfeat, len));
    Var seq;
    if (c.backbone == Backbone::ssm) {
      Var mixed = pointwise(p, pre + "mix", hcur);
      seq = ad::silu(ssm_layer(p, pre + "ssm1.", mixed));
      seq = ad::add(seq, pointwise(p, pre + "cond", cond));
      seq = ssm_layer(p, pre + "ssm2.", seq);
    } else {
      const std::size_t dilation = std::size_t{1} << (i % c.dilation_cycle);
      seq = pointwise(p, pre + "dilated", hcur, dilation);
      seq = ad::add(seq, pointwise(p, pre + "cond", cond));
    }
    Var out = gated(seq, h);
    x = ad::scale(ad::add(x, pointwise(p, pre + "res", out)), inv_sqrt2);
    Var s = pointwise(p, pre + "skip", out);
    skip_sum = skip_sum.valid() ? ad::add(skip_sum, s) : s;
  }
  (void)tape;
  Var y = ad::scale(skip_sum, 1.0 / std::sqrt(static_cast<double>(c.blocks)));
  y = ad::relu(pointwise(p, "out1", y));
  return pointwise(p, "out2", y);
}

Var mlp_forward(Tape& tape, const BoundParams& p, const ModelConfig& c, Var x_t, Var tfeat, const NdArray& cond) {
  const std::size_t batch = x_t.shape()[0], flat = c.features * c.length;
  Var x = ad::reshape(x_t, {batch, flat});
  Var h = ad::silu(ad::add(linear(p, "fc1", x), linear(p, "time", tfeat)));
  Var cflat = tape.constant(cond.reshaped({batch, 2 * flat}));
  h = ad::silu(ad::add(linear(p, "fc2", h), linear(p, "cond", cflat)));
  return ad::reshape(linear(p, "out", h), {batch, c.features, c.length});
}

}  // namespace

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams m{config, {}};
  Initializer init(m.params, seed);
  init_time_mlp(init, config);
  const std::size_t th = time_hidden(config), c = config.features, h = config.channels;
  if (config.backbone == Backbone::mlp) {
    const std::size_t flat = c * config.length, hid = config.mlp_hidden;
    init.weight("fc1.w", {flat, hid}, flat);
    init.constant("fc1.b", {1, hid});
    init.weight("time.w", {th, hid}, th);
    init.constant("time.b", {1, hid});
    init.weight("fc2.w", {hid, hid}, hid);
    init.constant("fc2.b", {1, hid});
    init.weight("cond.w", {2 * flat, hid}, 2 * flat);
    init.constant("cond.b", {1, hid});
    init.weight("out.w", {hid, flat}, hid);
    init.constant("out.b", {1, flat});
    return m;
  }
  init.weight("input.w", {h, c, 1}, c);
  init.constant("input.b", {h, 1});
  for (std::size_t i = 0; i < config.blocks; ++i) {
    const std::string pre = block_prefix(i);
    init.weight(pre + "time.w", {th, h}, th);
    init.constant(pre + "time.b", {1, h});
    if (config.backbone == Backbone::ssm) {
      init.weight(pre + "mix.w", {2 * h, h, 1}, h);
      init.constant(pre + "mix.b", {2 * h, 1});
      init.ssm(pre + "ssm1.", 2 * h, config.state_dim);
    } else {
      init.weight(pre + "dilated.w", {2 * h, h, config.kernel_size}, h * config.kernel_size);
      init.constant(pre + "dilated.b", {2 * h, 1});
    }
    init.weight(pre + "cond.w", {2 * h, 2 * c, 1}, 2 * c);
    init.constant(pre + "cond.b", {2 * h, 1});
    if (config.backbone == Backbone::ssm) init.ssm(pre + "ssm2.", 2 * h, config.state_dim);
    init.weight(pre + "res.w", {h, h, 1}, h);
    init.constant(pre + "res.b", {h, 1});
    init.weight(pre + "skip.w", {h, h, 1}, h);
    init.constant(pre + "skip.b", {h, 1});
  }
  init.weight("out1.w", {h, h, 1}, h);
  init.constant("out1.b", {h, 1});
  init.weight("out2.w", {c, h, 1}, h);
  init.constant("out2.b", {c, 1});
  return m;
}

Var denoiser_forward(Tape& tape, const ModelParams& model, std::span<const Var> leaves, Var x_t,
                     std::span<const std::size_t> steps, const Conditioning& cond) {
  const ModelConfig& c = model.config;
  const Shape& s = x_t.shape();
  if (s.size() != 3 || s[1] != c.features || s[2] != c.length) {
    throw ShapeError("denoiser input " + shape_string(s) + " does not match model [B," + std::to_string(c.features) +
                     "," + std::to_string(c.length) + "]");
  }
  if (steps.size() != s[0]) throw ShapeError("denoiser: one diffusion step per window required");
  if (cond.context.shape() != s || cond.mask.shape() != s) {
    throw ShapeError("denoiser: conditioning shape " + shape_string(cond.context.shape()) + " vs input " +
                     shape_string(s));
  }
  if (leaves.size() != model.params.size()) throw std::invalid_argument("denoiser: parameter count mismatch");
  const BoundParams p(model.params, leaves);
  Var tfeat = time_features(tape, p, c, steps);
  NdArray cin = conditioning_input(cond);
  Var out;
  if (c.backbone == Backbone::mlp) {
    out = mlp_forward(tape, p, c, x_t, tfeat, cin);
  } else {
    out = residual_stack(tape, p, c, x_t, tfeat, tape.constant(std::move(cin)));
  }
  if (!out.value().all_finite()) throw NumericError("denoiser: non-finite activation");
  return out;
}

SsmLayerParams ssm_layer_params(const ModelParams& model, std::size_t block, int which) {
  if (model.config.backbone != Backbone::ssm) throw std::invalid_argument("model has no SSM layers");
  const std::string pre = block_prefix(block) + "ssm" + std::to_string(which) + ".";
  const ParamSet& ps = model.params;
  return {ps[pre + "log_decay"], ps[pre + "frequency"], ps[pre + "log_step"], ps[pre + "b_re"],
          ps[pre + "b_im"],      ps[pre + "c_re"],      ps[pre + "c_im"],     ps[pre + "skip"]};
}

double max_transition_magnitude(const ModelParams& model) {
  if (model.config.backbone != Backbone::ssm) return 0.0;
  double m = 0.0;
  for (std::size_t b = 0; b < model.config.blocks; ++b) {
    for (int which : {1, 2}) m = std::max(m, max_transition_magnitude(ssm_layer_params(model, b, which)));
  }
  return m;
}

}  // namespace diffad
