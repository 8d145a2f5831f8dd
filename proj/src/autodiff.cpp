#include "diffad/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "diffad/fft.hpp"

namespace diffad {

const NdArray& Var::value() const { return tape_->value(id_); }

Var Tape::constant(NdArray value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(NdArray value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, record_});
  return Var(this, nodes_.size() - 1);
}

bool Tape::any_requires_grad(std::span<const std::size_t> ids) const {
  return std::any_of(ids.begin(), ids.end(), [&](std::size_t i) { return nodes_[i].requires_grad; });
}

Var Tape::push(NdArray value, std::vector<std::size_t> parents, Backward backward) {
  Node node;
  node.value = std::move(value);
  if (record_ && any_requires_grad(parents)) {
    node.requires_grad = true;
    node.parents = std::move(parents);
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

NdArray& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = NdArray(n.value.shape());
  return n.grad;
}

void Tape::backward(Var root) {
  if (!record_) throw std::logic_error("backward on a non-recording tape");
  if (root.tape() != this) throw std::invalid_argument("root belongs to another tape");
  if (value(root.id()).size() != 1) {
    throw ShapeError("gradient requested of non-scalar " + shape_string(value(root.id()).shape()));
  }
  for (auto& n : nodes_) n.grad = NdArray();
  grad(root.id())[0] = 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, i);
  }
}

std::vector<NdArray> gradient_of_scalar(Tape& tape, Var loss, std::span<const Var> params) {
  tape.backward(loss);
  std::vector<NdArray> out;
  out.reserve(params.size());
  for (const Var& p : params) {
    if (p.tape() != &tape) throw std::invalid_argument("parameter belongs to another tape");
    out.push_back(tape.has_grad(p.id()) ? tape.grad(p.id()) : NdArray(p.shape()));
  }
  return out;
}

namespace ad {
namespace {

void require_same_shape(const char* op, Var a, Var b) {
  if (a.tape() != b.tape()) throw std::invalid_argument(std::string(op) + ": operands on different tapes");
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

void accumulate(NdArray& dst, const NdArray& src, double factor = 1.0) {
  double* d = dst.data();
  const double* s = src.data();
  const std::size_t n = dst.size();
  for (std::size_t i = 0; i < n; ++i) d[i] += factor * s[i];
}

// Elementwise unary op given f(x) and f'(x) expressed through (x, y).
template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  Tape& tape = *a.tape();
  const NdArray& x = a.value();
  NdArray y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t ia = a.id();
  return tape.push(std::move(y), {ia}, [ia, df](Tape& t, std::size_t self) {
    const NdArray& g = t.grad(self);
    const NdArray& xv = t.value(ia);
    const NdArray& yv = t.value(self);
    NdArray& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(xv[i], yv[i]);
  });
}

std::size_t prod(const Shape& s, std::size_t from, std::size_t to) {
  std::size_t n = 1;
  for (std::size_t i = from; i < to; ++i) n *= s[i];
  return n;
}

// Spectra of two real signals (zero-padded to the plan size) from one complex transform.
void two_real_spectra(const fft::Plan& plan, std::span<const double> a, std::span<const double> b,
                      std::vector<fft::Complex>& fa, std::vector<fft::Complex>& fb) {
  const std::size_t n = plan.size();
  std::vector<fft::Complex> z(n);
  for (std::size_t i = 0; i < a.size(); ++i) z[i] = fft::Complex(a[i], b[i]);
  plan.transform(z, false);
  fa.resize(n);
  fb.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const fft::Complex zk = z[k];
    const fft::Complex zc = std::conj(z[(n - k) % n]);
    fa[k] = 0.5 * (zk + zc);
    fb[k] = fft::Complex(0.0, -0.5) * (zk - zc);
  }
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  NdArray y = a.value();
  accumulate(y, b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(y), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const NdArray& g = t.grad(self);
    if (t.requires_grad(ia)) accumulate(t.grad(ia), g);
    if (t.requires_grad(ib)) accumulate(t.grad(ib), g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a, b);
  NdArray y = a.value();
  accumulate(y, b.value(), -1.0);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(y), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const NdArray& g = t.grad(self);
    if (t.requires_grad(ia)) accumulate(t.grad(ia), g);
    if (t.requires_grad(ib)) accumulate(t.grad(ib), g, -1.0);
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a, b);
  const NdArray& x = a.value();
  const NdArray& z = b.value();
  NdArray y(x.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * z[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(y), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const NdArray& g = t.grad(self);
    const NdArray& xv = t.value(ia);
    const NdArray& zv = t.value(ib);
    if (t.requires_grad(ia)) {
      NdArray& ga = t.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * zv[i];
    }
    if (t.requires_grad(ib)) {
      NdArray& gb = t.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * xv[i];
    }
  });
}

Var scale(Var a, double factor) {
  NdArray y = a.value();
  for (auto& v : y.values()) v *= factor;
  const std::size_t ia = a.id();
  return a.tape()->push(std::move(y), {ia}, [ia, factor](Tape& t, std::size_t self) {
    accumulate(t.grad(ia), t.grad(self), factor);
  });
}

Var matmul(Var a, Var b) {
  const NdArray& x = a.value();
  const NdArray& w = b.value();
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0)) {
    throw ShapeError("matmul: " + shape_string(x.shape()) + " x " + shape_string(w.shape()));
  }
  const std::size_t m = x.dim(0), k = x.dim(1), n = w.dim(1);
  NdArray y({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* yr = y.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x[i * k + p];
      const double* wr = w.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) yr[j] += xv * wr[j];
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(y), {ia, ib}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    const NdArray& g = t.grad(self);
    const NdArray& xv = t.value(ia);
    const NdArray& wv = t.value(ib);
    if (t.requires_grad(ia)) {
      NdArray& ga = t.grad(ia);  // g [m,n] * w^T [n,k]
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double* wr = wv.data() + p * n;
          const double* gr = g.data() + i * n;
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += gr[j] * wr[j];
          ga[i * k + p] += s;
        }
      }
    }
    if (t.requires_grad(ib)) {
      NdArray& gb = t.grad(ib);  // x^T [k,m] * g [m,n]
      for (std::size_t i = 0; i < m; ++i) {
        const double* gr = g.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double xv_ip = xv[i * k + p];
          double* br = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) br[j] += xv_ip * gr[j];
        }
      }
    }
  });
}

namespace {

// conv1d with a single tap: y[b] = W x[b] per window.
Var pointwise_conv(Var x, Var w) {
  const NdArray& xv = x.value();
  const NdArray& wv = w.value();
  const std::size_t batch = xv.dim(0), cin = xv.dim(1), len = xv.dim(2), cout = wv.dim(0);
  NdArray y({batch, cout, len});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* __restrict xb = xv.data() + b * cin * len;
    for (std::size_t o = 0; o < cout; ++o) {
      double* __restrict yr = y.data() + (b * cout + o) * len;
      const double* wr = wv.data() + o * cin;
      for (std::size_t i = 0; i < cin; ++i) {
        const double wk = wr[i];
        const double* __restrict xr = xb + i * len;
        for (std::size_t l = 0; l < len; ++l) yr[l] += wk * xr[l];
      }
    }
  }
  const std::size_t ix = x.id(), iw = w.id();
  return x.tape()->push(std::move(y), {ix, iw}, [=](Tape& t, std::size_t self) {
    const NdArray& g = t.grad(self);
    const NdArray& xin = t.value(ix);
    const NdArray& win = t.value(iw);
    if (t.requires_grad(ix)) {
      NdArray& gx = t.grad(ix);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < cout; ++o) {
          const double* __restrict gr = g.data() + (b * cout + o) * len;
          for (std::size_t i = 0; i < cin; ++i) {
            const double wk = win[o * cin + i];
            double* __restrict gxr = gx.data() + (b * cin + i) * len;
            for (std::size_t l = 0; l < len; ++l) gxr[l] += wk * gr[l];
          }
        }
      }
    }
    if (t.requires_grad(iw)) {
      NdArray& gw = t.grad(iw);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < cout; ++o) {
          const double* __restrict gr = g.data() + (b * cout + o) * len;
          for (std::size_t i = 0; i < cin; ++i) {
            const double* __restrict xr = xin.data() + (b * cin + i) * len;
            double s = 0.0;
            for (std::size_t l = 0; l < len; ++l) s += gr[l] * xr[l];
            gw[o * cin + i] += s;
          }
        }
      }
    }
  });
}

}  // namespace

Var conv1d(Var x, Var w, std::size_t dilation) {
  const NdArray& xv = x.value();
  const NdArray& wv = w.value();
  if (xv.rank() != 3 || wv.rank() != 3 || wv.dim(1) != xv.dim(1) || wv.dim(2) % 2 == 0 || dilation == 0) {
    throw ShapeError("conv1d: input " + shape_string(xv.shape()) + ", weight " + shape_string(wv.shape()));
  }
  const std::size_t batch = xv.dim(0), cin = xv.dim(1), len = xv.dim(2);
  const std::size_t cout = wv.dim(0), taps = wv.dim(2);
  if (taps == 1) return pointwise_conv(x, w);
  const std::ptrdiff_t centre = static_cast<std::ptrdiff_t>(taps / 2);
  const auto L = static_cast<std::ptrdiff_t>(len);
  NdArray y({batch, cout, len});
  // For tap k the input offset is (k - centre) * dilation; valid output range [lo, hi).
  auto range = [=](std::size_t k, std::ptrdiff_t& off, std::ptrdiff_t& lo, std::ptrdiff_t& hi) {
    off = (static_cast<std::ptrdiff_t>(k) - centre) * static_cast<std::ptrdiff_t>(dilation);
    lo = std::max<std::ptrdiff_t>(0, -off);
    hi = std::min<std::ptrdiff_t>(L, L - off);
  };
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < cout; ++o) {
      double* yr = y.data() + (b * cout + o) * len;
      for (std::size_t i = 0; i < cin; ++i) {
        const double* xr = xv.data() + (b * cin + i) * len;
        for (std::size_t k = 0; k < taps; ++k) {
          const double wk = wv[(o * cin + i) * taps + k];
          std::ptrdiff_t off, lo, hi;
          range(k, off, lo, hi);
          for (std::ptrdiff_t l = lo; l < hi; ++l) yr[l] += wk * xr[l + off];
        }
      }
    }
  }
  const std::size_t ix = x.id(), iw = w.id();
  return x.tape()->push(std::move(y), {ix, iw},
                        [=](Tape& t, std::size_t self) {
                          const NdArray& g = t.grad(self);
                          const NdArray& xin = t.value(ix);
                          const NdArray& win = t.value(iw);
                          const bool need_x = t.requires_grad(ix), need_w = t.requires_grad(iw);
                          NdArray* gx = need_x ? &t.grad(ix) : nullptr;
                          NdArray* gw = need_w ? &t.grad(iw) : nullptr;
                          for (std::size_t b = 0; b < batch; ++b) {
                            for (std::size_t o = 0; o < cout; ++o) {
                              const double* gr = g.data() + (b * cout + o) * len;
                              for (std::size_t i = 0; i < cin; ++i) {
                                const double* xr = xin.data() + (b * cin + i) * len;
                                for (std::size_t k = 0; k < taps; ++k) {
                                  std::ptrdiff_t off, lo, hi;
                                  range(k, off, lo, hi);
                                  const std::size_t widx = (o * cin + i) * taps + k;
                                  if (need_x) {
                                    double* gxr = gx->data() + (b * cin + i) * len;
                                    const double wk = win[widx];
                                    for (std::ptrdiff_t l = lo; l < hi; ++l) gxr[l + off] += wk * gr[l];
                                  }
                                  if (need_w) {
                                    double s = 0.0;
                                    for (std::ptrdiff_t l = lo; l < hi; ++l) s += gr[l] * xr[l + off];
                                    (*gw)[widx] += s;
                                  }
                                }
                              }
                            }
                          }
                        });
}

Var causal_conv(Var u, Var k) {
  const NdArray& uv = u.value();
  const NdArray& kv = k.value();
  if (uv.rank() != 3 || kv.rank() != 2 || kv.dim(0) != uv.dim(1) || kv.dim(1) != uv.dim(2)) {
    throw ShapeError("causal_conv: signal " + shape_string(uv.shape()) + ", kernel " + shape_string(kv.shape()));
  }
  const std::size_t batch = uv.dim(0), chans = uv.dim(1), len = uv.dim(2);
  NdArray y(uv.shape());
  for (std::size_t h = 0; h < chans; ++h) {
    fft::CausalConvolver conv(std::span<const double>(kv.data() + h * len, len));
    for (std::size_t b = 0; b < batch; b += 2) {
      auto row = [&](const NdArray& a, std::size_t bb) {
        return std::span<const double>(a.data() + (bb * chans + h) * len, len);
      };
      auto out = [&](std::size_t bb) { return std::span<double>(y.data() + (bb * chans + h) * len, len); };
      if (b + 1 < batch) {
        conv.apply(row(uv, b), out(b), row(uv, b + 1), out(b + 1));
      } else {
        conv.apply(row(uv, b), out(b));
      }
    }
  }
  const std::size_t iu = u.id(), ik = k.id();
  return u.tape()->push(std::move(y), {iu, ik}, [=](Tape& t, std::size_t self) {
    const NdArray& g = t.grad(self);
    const NdArray& uin = t.value(iu);
    const NdArray& kin = t.value(ik);
    const bool need_u = t.requires_grad(iu), need_k = t.requires_grad(ik);
    const auto plan = fft::plan_for(fft::next_pow2(2 * len));
    const std::size_t n = plan->size();
    std::vector<fft::Complex> kspec, gspec, uspec, acc(n), buf(n);
    std::vector<double> zeros(len, 0.0);
    for (std::size_t h = 0; h < chans; ++h) {
      std::vector<fft::Complex> unused;
      two_real_spectra(*plan, std::span<const double>(kin.data() + h * len, len), zeros, kspec, unused);
      std::fill(acc.begin(), acc.end(), fft::Complex{});
      std::vector<fft::Complex> pending;  // gu spectrum waiting for a partner
      std::size_t pending_b = 0;
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t row = (b * chans + h) * len;
        two_real_spectra(*plan, std::span<const double>(g.data() + row, len),
                         std::span<const double>(uin.data() + row, len), gspec, uspec);
        if (need_k) {
          for (std::size_t q = 0; q < n; ++q) acc[q] += gspec[q] * std::conj(uspec[q]);
        }
        if (need_u) {
          std::vector<fft::Complex> p(n);
          for (std::size_t q = 0; q < n; ++q) p[q] = gspec[q] * std::conj(kspec[q]);
          auto flush = [&](const std::vector<fft::Complex>& p1, std::size_t b1, const std::vector<fft::Complex>* p2,
                           std::size_t b2) {
            for (std::size_t q = 0; q < n; ++q) buf[q] = p1[q] + (p2 ? fft::Complex(0, 1) * (*p2)[q] : fft::Complex{});
            plan->transform(buf, true);
            NdArray& gu = t.grad(iu);
            for (std::size_t i = 0; i < len; ++i) {
              gu[(b1 * chans + h) * len + i] += buf[i].real();
              if (p2) gu[(b2 * chans + h) * len + i] += buf[i].imag();
            }
          };
          if (pending.empty()) {
            pending = std::move(p);
            pending_b = b;
          } else {
            flush(pending, pending_b, &p, b);
            pending.clear();
          }
          if (b + 1 == batch && !pending.empty()) {
            flush(pending, pending_b, nullptr, 0);
            pending.clear();
          }
        }
      }
      if (need_k) {
        plan->transform(acc, true);
        NdArray& gk = t.grad(ik);
        for (std::size_t j = 0; j < len; ++j) gk[h * len + j] += acc[j].real();
      }
    }
  });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var silu(Var a) { return mul(a, sigmoid(a)); }

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.id();
  return a.tape()->push(NdArray::scalar(s), {ia}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (auto& v : t.grad(ia).values()) v += g;
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& s = a.shape();
  if (axis >= s.size() || begin >= end || end > s[axis]) {
    throw ShapeError("slice [" + std::to_string(begin) + "," + std::to_string(end) + ") on axis " +
                     std::to_string(axis) + " of " + shape_string(s));
  }
  const std::size_t outer = prod(s, 0, axis), inner = prod(s, axis + 1, s.size());
  const std::size_t full = s[axis] * inner, part = (end - begin) * inner;
  Shape os = s;
  os[axis] = end - begin;
  NdArray y(os);
  const NdArray& x = a.value();
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(x.data() + o * full + begin * inner, part, y.data() + o * part);
  }
  const std::size_t ia = a.id();
  return a.tape()->push(std::move(y), {ia}, [=](Tape& t, std::size_t self) {
    const NdArray& g = t.grad(self);
    NdArray& ga = t.grad(ia);
    for (std::size_t o = 0; o < outer; ++o) {
      double* dst = ga.data() + o * full + begin * inner;
      const double* src = g.data() + o * part;
      for (std::size_t i = 0; i < part; ++i) dst[i] += src[i];
    }
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero arrays");
  Shape os = parts[0].shape();
  if (axis >= os.size()) throw ShapeError("concat axis out of range");
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Shape& ps = p.shape();
    Shape a = ps, b = os;
    if (a.size() != b.size()) throw ShapeError("concat rank mismatch");
    a[axis] = b[axis] = 0;
    if (a != b) throw ShapeError("concat: " + shape_string(ps) + " vs " + shape_string(os));
    total += ps[axis];
  }
  os[axis] = total;
  const std::size_t outer = prod(os, 0, axis), inner = prod(os, axis + 1, os.size());
  NdArray y(os);
  std::vector<std::size_t> ids, widths;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const std::size_t w = p.shape()[axis] * inner;
    const NdArray& x = p.value();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(x.data() + o * w, w, y.data() + o * total * inner + offset);
    }
    ids.push_back(p.id());
    widths.push_back(w);
    offset += w;
  }
  Tape* tape = parts[0].tape();
  return tape->push(std::move(y), ids, [=](Tape& t, std::size_t self) {
    const NdArray& g = t.grad(self);
    std::size_t off = 0;
    for (std::size_t q = 0; q < ids.size(); ++q) {
      if (t.requires_grad(ids[q])) {
        NdArray& gp = t.grad(ids[q]);
        for (std::size_t o = 0; o < outer; ++o) {
          const double* src = g.data() + o * total * inner + off;
          double* dst = gp.data() + o * widths[q];
          for (std::size_t i = 0; i < widths[q]; ++i) dst[i] += src[i];
        }
      }
      off += widths[q];
    }
  });
}

Var broadcast_to(Var a, Shape shape) {
  const Shape& s = a.shape();
  if (s.size() > shape.size()) throw ShapeError("broadcast_to: rank cannot shrink");
  const std::size_t lead = shape.size() - s.size();
  std::vector<std::size_t> in_stride(shape.size(), 0);
  std::size_t stride = 1;
  for (std::size_t i = s.size(); i-- > 0;) {
    const std::size_t od = shape[lead + i];
    if (s[i] != od && s[i] != 1) {
      throw ShapeError("broadcast_to: " + shape_string(s) + " -> " + shape_string(shape));
    }
    in_stride[lead + i] = (s[i] == 1) ? 0 : stride;
    stride *= s[i];
  }
  // Map every output element to its source element once; reused by backward.
  const std::size_t n = shape_size(shape);
  auto src = std::make_shared<std::vector<std::size_t>>(n);
  std::vector<std::size_t> idx(shape.size(), 0);
  std::size_t in = 0;
  for (std::size_t o = 0; o < n; ++o) {
    (*src)[o] = in;
    for (std::size_t d = shape.size(); d-- > 0;) {
      ++idx[d];
      in += in_stride[d];
      if (idx[d] < shape[d]) break;
      in -= in_stride[d] * idx[d];
      idx[d] = 0;
    }
  }
  NdArray y(shape);
  const NdArray& x = a.value();
  for (std::size_t o = 0; o < n; ++o) y[o] = x[(*src)[o]];
  const std::size_t ia = a.id();
  return a.tape()->push(std::move(y), {ia}, [ia, src](Tape& t, std::size_t self) {
    const NdArray& g = t.grad(self);
    NdArray& ga = t.grad(ia);
    for (std::size_t o = 0; o < g.size(); ++o) ga[(*src)[o]] += g[o];
  });
}

Var reshape(Var a, Shape shape) {
  NdArray y = a.value().reshaped(shape);
  const std::size_t ia = a.id();
  return a.tape()->push(std::move(y), {ia}, [ia](Tape& t, std::size_t self) {
    accumulate(t.grad(ia), t.grad(self));
  });
}

}  // namespace ad
}  // namespace diffad
