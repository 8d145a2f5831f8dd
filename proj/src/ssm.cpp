#include "diffad/ssm.hpp"

#include <cmath>

namespace diffad {

using cd = std::complex<double>;

namespace {

struct StateTerms {
  cd lambda, abar, e, b, c;
  double dt;
};

StateTerms state_terms(double log_decay, double freq, double log_step, double br, double bi, double cr,
                       double ci) {
  StateTerms s;
  s.lambda = cd(-std::exp(log_decay), freq);
  s.dt = std::exp(log_step);
  s.abar = std::exp(s.dt * s.lambda);
  s.e = (s.abar - 1.0) / s.lambda;
  s.b = cd(br, bi);
  s.c = cd(cr, ci);
  return s;
}

void check_layer(const SsmLayerParams& layer) {
  const Shape hn = layer.log_decay.shape();
  if (hn.size() != 2 || layer.frequency.shape() != hn || layer.b_re.shape() != hn || layer.b_im.shape() != hn ||
      layer.c_re.shape() != hn || layer.c_im.shape() != hn || layer.log_step.shape() != Shape{hn[0]} ||
      layer.skip.shape() != Shape{hn[0]}) {
    throw ShapeError("inconsistent SSM layer parameter shapes");
  }
}

}  // namespace

DiscreteSsm discretize_zoh(const SsmLayerParams& layer) {
  check_layer(layer);
  DiscreteSsm d;
  d.channels = layer.channels();
  d.state_dim = layer.state_dim();
  d.skip.assign(layer.skip.values().begin(), layer.skip.values().end());
  for (std::size_t h = 0; h < d.channels; ++h) {
    for (std::size_t n = 0; n < d.state_dim; ++n) {
      const std::size_t i = h * d.state_dim + n;
      const auto s = state_terms(layer.log_decay[i], layer.frequency[i], layer.log_step[h], layer.b_re[i],
                                 layer.b_im[i], layer.c_re[i], layer.c_im[i]);
      d.abar.push_back(s.abar);
      d.bbar.push_back(s.e * s.b);
      d.c.push_back(s.c);
    }
  }
  return d;
}

NdArray ssm_kernel(const DiscreteSsm& ssm, std::size_t length) {
  if (length == 0) throw ShapeError("ssm_kernel: length must be >= 1");
  const std::size_t hn = ssm.channels * ssm.state_dim;
  if (ssm.abar.size() != hn || ssm.bbar.size() != hn || ssm.c.size() != hn || hn == 0) {
    throw ShapeError("ssm_kernel: inconsistent discrete SSM");
  }
  NdArray k({ssm.channels, length});
  for (std::size_t h = 0; h < ssm.channels; ++h) {
    for (std::size_t n = 0; n < ssm.state_dim; ++n) {
      const std::size_t i = h * ssm.state_dim + n;
      if (std::abs(ssm.abar[i]) >= 1.0) {
        throw NumericError("ssm_kernel: unstable state (|abar| >= 1) at channel " + std::to_string(h));
      }
      cd w = ssm.c[i] * ssm.bbar[i];
      for (std::size_t j = 0; j < length; ++j) {
        k[h * length + j] += w.real();
        w *= ssm.abar[i];
      }
    }
  }
  return k;
}

NdArray ssm_kernel(const SsmLayerParams& layer, std::size_t length) {
  return ssm_kernel(discretize_zoh(layer), length);
}

double max_transition_magnitude(const SsmLayerParams& layer) {
  double m = 0.0;
  for (const cd& a : discretize_zoh(layer).abar) m = std::max(m, std::abs(a));
  return m;
}

namespace ad {

Var ssm_kernel(Var log_decay, Var frequency, Var log_step, Var b_re, Var b_im, Var c_re, Var c_im,
               std::size_t length) {
  SsmLayerParams layer{log_decay.value(), frequency.value(), log_step.value(), b_re.value(),
                       b_im.value(),      c_re.value(),      c_im.value(),     NdArray(log_step.shape())};
  NdArray k = diffad::ssm_kernel(layer, length);
  const std::size_t channels = layer.channels(), states = layer.state_dim();
  std::vector<std::size_t> ids = {log_decay.id(), frequency.id(), log_step.id(), b_re.id(),
                                  b_im.id(),      c_re.id(),      c_im.id()};
  return log_decay.tape()->push(std::move(k), ids, [ids, channels, states, length](Tape& t, std::size_t self) {
    const NdArray& g = t.grad(self);
    const NdArray& a = t.value(ids[0]);
    const NdArray& f = t.value(ids[1]);
    const NdArray& ls = t.value(ids[2]);
    const NdArray& br = t.value(ids[3]);
    const NdArray& bi = t.value(ids[4]);
    const NdArray& cr = t.value(ids[5]);
    const NdArray& ci = t.value(ids[6]);
    NdArray ga(a.shape()), gf(a.shape()), gls(ls.shape()), gbr(a.shape()), gbi(a.shape()), gcr(a.shape()),
        gci(a.shape());
    for (std::size_t h = 0; h < channels; ++h) {
      const double* gh = g.data() + h * length;
      for (std::size_t n = 0; n < states; ++n) {
        const std::size_t i = h * states + n;
        const auto s = state_terms(a[i], f[i], ls[h], br[i], bi[i], cr[i], ci[i]);
        // S0 = sum_j G_j abar^j, S1 = sum_j G_j j abar^(j-1)
        cd s0 = 0.0, s1 = 0.0, pow = 1.0, pow_prev = 0.0;
        for (std::size_t j = 0; j < length; ++j) {
          s0 += gh[j] * pow;
          s1 += gh[j] * static_cast<double>(j) * pow_prev;
          pow_prev = pow;
          pow *= s.abar;
        }
        const cd bbar = s.e * s.b;
        const cd w = s.c * bbar;
        const cd cb = s.c * s.b;
        const cd de_dlambda = (s.dt * s.abar * s.lambda - s.abar + 1.0) / (s.lambda * s.lambda);
        const cd q = cb * de_dlambda * s0 + w * s1 * s.dt * s.abar;
        ga[i] = (-std::exp(a[i]) * q).real();
        gf[i] = -q.imag();
        gls[h] += (s.dt * (cb * s.abar * s0 + w * s1 * s.lambda * s.abar)).real();
        const cd cs = s.c * s.e * s0;
        gbr[i] = cs.real();
        gbi[i] = -cs.imag();
        const cd bs = bbar * s0;
        gcr[i] = bs.real();
        gci[i] = -bs.imag();
      }
    }
    const NdArray* parts[] = {&ga, &gf, &gls, &gbr, &gbi, &gcr, &gci};
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (!t.requires_grad(ids[p])) continue;
      NdArray& dst = t.grad(ids[p]);
      for (std::size_t q = 0; q < dst.size(); ++q) dst[q] += (*parts[p])[q];
    }
  });
}

}  // namespace ad
}  // namespace diffad
