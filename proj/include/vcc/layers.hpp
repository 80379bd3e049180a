#pragma once

// Layer kernels with their backward passes. Tensors are [H, W, C] for
// spatial layers and flat vectors otherwise. Reductions accumulate in double.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vcc/rng.hpp"
#include "vcc/tensor.hpp"

namespace vcc {

enum class Padding { Same, Valid };
enum class Mode { Train, Infer };

// ---------------------------------------------------------------------------
// Convolution (cross-correlation, no kernel flip). Weights are [kh, kw, Cin, F].

struct ConvGeometry {
  std::size_t out_h = 0, out_w = 0;
  std::size_t pad_top = 0, pad_left = 0;
};

inline ConvGeometry conv_geometry(std::size_t in_h, std::size_t in_w, std::size_t kh, std::size_t kw,
                                  std::size_t stride, Padding padding) {
  if (stride < 1) fail(ErrorCode::ShapeMismatch, "conv stride must be >= 1");
  if (kh < 1 || kw < 1) fail(ErrorCode::ShapeMismatch, "conv kernel must be non-empty");
  ConvGeometry g;
  if (padding == Padding::Same) {
    g.out_h = (in_h + stride - 1) / stride;
    g.out_w = (in_w + stride - 1) / stride;
    std::size_t need_h = (g.out_h - 1) * stride + kh;
    std::size_t need_w = (g.out_w - 1) * stride + kw;
    g.pad_top = need_h > in_h ? (need_h - in_h) / 2 : 0;
    g.pad_left = need_w > in_w ? (need_w - in_w) / 2 : 0;
  } else {
    if (in_h < kh || in_w < kw) fail(ErrorCode::ShapeMismatch, "valid conv: kernel larger than input");
    g.out_h = (in_h - kh) / stride + 1;
    g.out_w = (in_w - kw) / stride + 1;
  }
  return g;
}

namespace detail {

template <class T>
void check_conv_shapes(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                       const BasicTensor<T>& bias) {
  if (input.rank() != 3) fail(ErrorCode::ShapeMismatch, "conv2d input must be [H,W,C]");
  if (weights.rank() != 4 || weights.dim(2) != input.dim(2)) {
    fail(ErrorCode::ShapeMismatch, "conv2d weights " + shape_string(weights.shape()) +
                                       " incompatible with input " + shape_string(input.shape()));
  }
  if (bias.rank() != 1 || bias.dim(0) != weights.dim(3)) {
    fail(ErrorCode::ShapeMismatch, "conv2d bias must be [F]");
  }
}

}  // namespace detail

template <class T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                      const BasicTensor<T>& bias, std::size_t stride, Padding padding) {
  detail::check_conv_shapes(input, weights, bias);
  const std::size_t H = input.dim(0), W = input.dim(1), C = input.dim(2);
  const std::size_t kh = weights.dim(0), kw = weights.dim(1), F = weights.dim(3);
  const ConvGeometry g = conv_geometry(H, W, kh, kw, stride, padding);

  BasicTensor<T> out({g.out_h, g.out_w, F});
  std::vector<double> acc(F);
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      for (std::size_t f = 0; f < F; ++f) acc[f] = bias[f];
      for (std::size_t ky = 0; ky < kh; ++ky) {
        std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(g.pad_left);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
          const T* px = &input(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), 0);
          const T* wk = weights.data() + (ky * kw + kx) * C * F;
          for (std::size_t c = 0; c < C; ++c) {
            const double x = px[c];
            const T* wrow = wk + c * F;
            for (std::size_t f = 0; f < F; ++f) acc[f] += x * wrow[f];
          }
        }
      }
      T* o = &out(oy, ox, 0);
      for (std::size_t f = 0; f < F; ++f) o[f] = static_cast<T>(acc[f]);
    }
  }
  return out;
}

template <class T>
struct ConvGrads {
  BasicTensor<T> input, weights, bias;
};

template <class T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out, std::size_t stride, Padding padding) {
  const std::size_t H = input.dim(0), W = input.dim(1), C = input.dim(2);
  const std::size_t kh = weights.dim(0), kw = weights.dim(1), F = weights.dim(3);
  const ConvGeometry g = conv_geometry(H, W, kh, kw, stride, padding);
  require_shape(grad_out, {g.out_h, g.out_w, F}, "conv2d_backward grad");

  std::vector<double> gi(input.size(), 0.0), gw(weights.size(), 0.0), gb(F, 0.0);
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      const T* go = &grad_out(oy, ox, 0);
      for (std::size_t f = 0; f < F; ++f) gb[f] += go[f];
      for (std::size_t ky = 0; ky < kh; ++ky) {
        std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(g.pad_left);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
          std::size_t in_base = (static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix)) * C;
          std::size_t w_base = (ky * kw + kx) * C * F;
          for (std::size_t c = 0; c < C; ++c) {
            const double x = input[in_base + c];
            const T* wrow = weights.data() + w_base + c * F;
            double* gwrow = gw.data() + w_base + c * F;
            double sum = 0.0;
            for (std::size_t f = 0; f < F; ++f) {
              gwrow[f] += x * go[f];
              sum += static_cast<double>(wrow[f]) * go[f];
            }
            gi[in_base + c] += sum;
          }
        }
      }
    }
  }
  return {BasicTensor<T>(input.shape(), std::vector<T>(gi.begin(), gi.end())),
          BasicTensor<T>(weights.shape(), std::vector<T>(gw.begin(), gw.end())),
          BasicTensor<T>({F}, std::vector<T>(gb.begin(), gb.end()))};
}

// ---------------------------------------------------------------------------
// ReLU

template <class T>
BasicTensor<T> relu(const BasicTensor<T>& t) {
  BasicTensor<T> out = t;
  for (T& v : out.values()) v = v > T(0) ? v : T(0);
  return out;
}

template <class T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_out) {
  BasicTensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(input[i] > T(0))) g[i] = T(0);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Pooling: non-overlapping windows; H and W must be divisible by the window.

namespace detail {

template <class T>
void check_pool(const BasicTensor<T>& t, std::size_t ph, std::size_t pw, const char* what) {
  if (t.rank() != 3) fail(ErrorCode::ShapeMismatch, std::string(what) + " input must be [H,W,C]");
  if (ph == 0 || pw == 0 || t.dim(0) % ph != 0 || t.dim(1) % pw != 0) {
    fail(ErrorCode::IndivisibleShape, std::string(what) + ": " + shape_string(t.shape()) +
                                          " not divisible by " + std::to_string(ph) + "x" +
                                          std::to_string(pw));
  }
}

}  // namespace detail

template <class T>
BasicTensor<T> avg_pool(const BasicTensor<T>& t, std::size_t ph, std::size_t pw) {
  detail::check_pool(t, ph, pw, "avg_pool");
  const std::size_t OH = t.dim(0) / ph, OW = t.dim(1) / pw, C = t.dim(2);
  BasicTensor<T> out({OH, OW, C});
  const double inv = 1.0 / static_cast<double>(ph * pw);
  for (std::size_t oy = 0; oy < OH; ++oy) {
    for (std::size_t ox = 0; ox < OW; ++ox) {
      for (std::size_t c = 0; c < C; ++c) {
        double sum = 0.0;
        for (std::size_t dy = 0; dy < ph; ++dy) {
          for (std::size_t dx = 0; dx < pw; ++dx) sum += t(oy * ph + dy, ox * pw + dx, c);
        }
        out(oy, ox, c) = static_cast<T>(sum * inv);
      }
    }
  }
  return out;
}

template <class T>
BasicTensor<T> avg_pool_backward(const std::vector<std::size_t>& input_shape, const BasicTensor<T>& grad_out,
                                 std::size_t ph, std::size_t pw) {
  BasicTensor<T> g(input_shape);
  const double inv = 1.0 / static_cast<double>(ph * pw);
  const std::size_t OH = grad_out.dim(0), OW = grad_out.dim(1), C = grad_out.dim(2);
  for (std::size_t oy = 0; oy < OH; ++oy) {
    for (std::size_t ox = 0; ox < OW; ++ox) {
      for (std::size_t c = 0; c < C; ++c) {
        T share = static_cast<T>(grad_out(oy, ox, c) * inv);
        for (std::size_t dy = 0; dy < ph; ++dy) {
          for (std::size_t dx = 0; dx < pw; ++dx) g(oy * ph + dy, ox * pw + dx, c) = share;
        }
      }
    }
  }
  return g;
}

template <class T>
struct MaxPoolResult {
  BasicTensor<T> output;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

// Ties resolve to the first element in row-major window order.
template <class T>
MaxPoolResult<T> max_pool(const BasicTensor<T>& t, std::size_t ph, std::size_t pw) {
  detail::check_pool(t, ph, pw, "max_pool");
  const std::size_t W = t.dim(1), OH = t.dim(0) / ph, OW = W / pw, C = t.dim(2);
  MaxPoolResult<T> r{BasicTensor<T>({OH, OW, C}), std::vector<std::size_t>(OH * OW * C)};
  for (std::size_t oy = 0; oy < OH; ++oy) {
    for (std::size_t ox = 0; ox < OW; ++ox) {
      for (std::size_t c = 0; c < C; ++c) {
        std::size_t best = (oy * ph * W + ox * pw) * C + c;
        for (std::size_t dy = 0; dy < ph; ++dy) {
          for (std::size_t dx = 0; dx < pw; ++dx) {
            std::size_t i = ((oy * ph + dy) * W + ox * pw + dx) * C + c;
            if (t[i] > t[best]) best = i;
          }
        }
        std::size_t o = (oy * OW + ox) * C + c;
        r.output[o] = t[best];
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

template <class T>
BasicTensor<T> max_pool_backward(const std::vector<std::size_t>& input_shape, const BasicTensor<T>& grad_out,
                                 const std::vector<std::size_t>& argmax) {
  BasicTensor<T> g(input_shape);
  for (std::size_t o = 0; o < grad_out.size(); ++o) g[argmax[o]] += grad_out[o];
  return g;
}

// ---------------------------------------------------------------------------
// Inverted dropout.

template <class T>
struct DropoutResult {
  BasicTensor<T> output;
  std::vector<T> scale;  // per-element multiplier: 0 or 1/(1-rate); empty in infer mode
};

template <class T>
DropoutResult<T> dropout(const BasicTensor<T>& t, double rate, Mode mode, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) fail(ErrorCode::BadRate, "dropout rate must be in [0,1)");
  if (mode == Mode::Infer || rate == 0.0) return {t, {}};
  Rng rng(seed);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  DropoutResult<T> r{t, std::vector<T>(t.size())};
  for (std::size_t i = 0; i < t.size(); ++i) {
    r.scale[i] = rng.uniform() < rate ? T(0) : keep_scale;
    r.output[i] = t[i] * r.scale[i];
  }
  return r;
}

template <class T>
BasicTensor<T> dropout_backward(const BasicTensor<T>& grad_out, const std::vector<T>& scale) {
  if (scale.empty()) return grad_out;
  BasicTensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= scale[i];
  return g;
}

// ---------------------------------------------------------------------------
// Dense: y = x W + b, with x flattened to n = input.size() and W [n, m].

template <class T>
BasicTensor<T> dense(const BasicTensor<T>& input, const BasicTensor<T>& weights, const BasicTensor<T>& bias) {
  const std::size_t n = input.size();
  if (weights.rank() != 2 || weights.dim(0) != n || bias.rank() != 1 || bias.dim(0) != weights.dim(1)) {
    fail(ErrorCode::ShapeMismatch, "dense: input " + shape_string(input.shape()) + ", weights " +
                                       shape_string(weights.shape()) + ", bias " + shape_string(bias.shape()));
  }
  const std::size_t m = weights.dim(1);
  std::vector<double> acc(bias.values().begin(), bias.values().end());
  for (std::size_t i = 0; i < n; ++i) {
    const double x = input[i];
    if (x == 0.0) continue;
    const T* row = weights.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) acc[j] += x * row[j];
  }
  return BasicTensor<T>({m}, std::vector<T>(acc.begin(), acc.end()));
}

template <class T>
struct DenseGrads {
  BasicTensor<T> input, weights, bias;
};

template <class T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out) {
  const std::size_t n = input.size(), m = weights.dim(1);
  require_shape(grad_out, {m}, "dense_backward grad");
  DenseGrads<T> g{BasicTensor<T>(input.shape()), BasicTensor<T>(weights.shape()), grad_out};
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = weights.data() + i * m;
    T* grow = g.weights.data() + i * m;
    const T x = input[i];
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      grow[j] = x * grad_out[j];
      sum += static_cast<double>(row[j]) * grad_out[j];
    }
    g.input[i] = static_cast<T>(sum);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Softmax and categorical cross-entropy.

template <class T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
  if (logits.size() == 0) fail(ErrorCode::ShapeMismatch, "softmax of empty tensor");
  const T peak = *std::max_element(logits.values().begin(), logits.values().end());
  std::vector<double> e(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = std::exp(static_cast<double>(logits[i]) - static_cast<double>(peak));
    total += e[i];
  }
  BasicTensor<T> out(logits.shape());
  for (std::size_t i = 0; i < e.size(); ++i) out[i] = static_cast<T>(e[i] / total);
  return out;
}

inline constexpr double kCrossEntropyEpsilon = 1e-12;

template <class T>
double cross_entropy(const BasicTensor<T>& pred, std::size_t target) {
  if (target >= pred.size()) {
    fail(ErrorCode::BadIndex, "target class " + std::to_string(target) + " of " + std::to_string(pred.size()));
  }
  return -std::log(std::max(static_cast<double>(pred[target]), kCrossEntropyEpsilon));
}

// d(cross_entropy(softmax(z)))/dz = softmax(z) - onehot(target).
template <class T>
BasicTensor<T> softmax_cross_entropy_grad(const BasicTensor<T>& probs, std::size_t target) {
  if (target >= probs.size()) fail(ErrorCode::BadIndex, "target class out of range");
  BasicTensor<T> g = probs;
  g[target] -= T(1);
  return g;
}

// ---------------------------------------------------------------------------
// LSTM cell. Gate blocks are laid out [input | forget | cell | output] along
// the 4k axis of W [d, 4k], U [k, 4k] and b [4k].

enum class Gate : std::size_t { Input = 0, Forget = 1, Cell = 2, Output = 3 };

template <class T>
struct LstmParams {
  BasicTensor<T> W, U, b;

  std::size_t input_size() const { return W.dim(0); }
  std::size_t hidden() const { return U.dim(0); }
  static std::size_t offset(Gate gate, std::size_t hidden) { return static_cast<std::size_t>(gate) * hidden; }
};

template <class T>
struct LstmStep {
  BasicTensor<T> x, h_prev, c_prev;
  BasicTensor<T> gates;  // activated i, f, g, o, each of length k
  BasicTensor<T> h, c;
};

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

template <class T>
LstmStep<T> lstm_step(const BasicTensor<T>& x, const BasicTensor<T>& h, const BasicTensor<T>& c,
                      const LstmParams<T>& p) {
  const std::size_t d = x.size(), k = h.size();
  if (p.W.rank() != 2 || p.W.dim(0) != d || p.W.dim(1) != 4 * k || p.U.rank() != 2 || p.U.dim(0) != k ||
      p.U.dim(1) != 4 * k || p.b.size() != 4 * k || c.size() != k) {
    fail(ErrorCode::ShapeMismatch, "lstm_step: x " + shape_string(x.shape()) + ", h " + shape_string(h.shape()) +
                                       ", W " + shape_string(p.W.shape()) + ", U " + shape_string(p.U.shape()));
  }
  std::vector<double> z(p.b.values().begin(), p.b.values().end());
  for (std::size_t i = 0; i < d; ++i) {
    const double xi = x[i];
    const T* row = p.W.data() + i * 4 * k;
    for (std::size_t j = 0; j < 4 * k; ++j) z[j] += xi * row[j];
  }
  for (std::size_t i = 0; i < k; ++i) {
    const double hi = h[i];
    const T* row = p.U.data() + i * 4 * k;
    for (std::size_t j = 0; j < 4 * k; ++j) z[j] += hi * row[j];
  }

  LstmStep<T> s{x.reshaped({d}), h, c, BasicTensor<T>({4 * k}), BasicTensor<T>({k}), BasicTensor<T>({k})};
  for (std::size_t j = 0; j < k; ++j) {
    const double gi = sigmoid(z[j]);
    const double gf = sigmoid(z[k + j]);
    const double gg = std::tanh(z[2 * k + j]);
    const double go = sigmoid(z[3 * k + j]);
    const double cn = gf * static_cast<double>(c[j]) + gi * gg;
    s.gates[j] = static_cast<T>(gi);
    s.gates[k + j] = static_cast<T>(gf);
    s.gates[2 * k + j] = static_cast<T>(gg);
    s.gates[3 * k + j] = static_cast<T>(go);
    s.c[j] = static_cast<T>(cn);
    s.h[j] = static_cast<T>(go * std::tanh(cn));
  }
  return s;
}

template <class T>
struct LstmStepGrads {
  BasicTensor<T> x, h_prev, c_prev;
};

// Backpropagates (dh, dc) through one step and accumulates parameter
// gradients into `grads` (same layout as the parameters).
template <class T>
LstmStepGrads<T> lstm_step_backward(const LstmStep<T>& s, const LstmParams<T>& p, const BasicTensor<T>& dh,
                                    const BasicTensor<T>& dc, LstmParams<T>& grads) {
  const std::size_t d = s.x.size(), k = s.h.size();
  std::vector<double> dz(4 * k);
  std::vector<double> dc_prev(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double gi = s.gates[j], gf = s.gates[k + j], gg = s.gates[2 * k + j], go = s.gates[3 * k + j];
    const double tc = std::tanh(static_cast<double>(s.c[j]));
    const double dct = static_cast<double>(dc[j]) + static_cast<double>(dh[j]) * go * (1.0 - tc * tc);
    dz[j] = dct * gg * gi * (1.0 - gi);
    dz[k + j] = dct * static_cast<double>(s.c_prev[j]) * gf * (1.0 - gf);
    dz[2 * k + j] = dct * gi * (1.0 - gg * gg);
    dz[3 * k + j] = static_cast<double>(dh[j]) * tc * go * (1.0 - go);
    dc_prev[j] = dct * gf;
  }

  LstmStepGrads<T> out{BasicTensor<T>({d}), BasicTensor<T>({k}), BasicTensor<T>({k})};
  for (std::size_t j = 0; j < 4 * k; ++j) grads.b[j] += static_cast<T>(dz[j]);
  for (std::size_t i = 0; i < d; ++i) {
    const T* row = p.W.data() + i * 4 * k;
    T* grow = grads.W.data() + i * 4 * k;
    const double xi = s.x[i];
    double sum = 0.0;
    for (std::size_t j = 0; j < 4 * k; ++j) {
      grow[j] += static_cast<T>(xi * dz[j]);
      sum += static_cast<double>(row[j]) * dz[j];
    }
    out.x[i] = static_cast<T>(sum);
  }
  for (std::size_t i = 0; i < k; ++i) {
    const T* row = p.U.data() + i * 4 * k;
    T* grow = grads.U.data() + i * 4 * k;
    const double hi = s.h_prev[i];
    double sum = 0.0;
    for (std::size_t j = 0; j < 4 * k; ++j) {
      grow[j] += static_cast<T>(hi * dz[j]);
      sum += static_cast<double>(row[j]) * dz[j];
    }
    out.h_prev[i] = static_cast<T>(sum);
    out.c_prev[i] = static_cast<T>(dc_prev[i]);
  }
  return out;
}

}  // namespace vcc
