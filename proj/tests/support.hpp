#pragma once

// Test-only generators and brute-force oracles. Nothing here calls into the
// implementation paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <vector>

#include "vcc/vcc.hpp"

namespace vcc::test {

inline Frame random_frame(std::size_t w, std::size_t h, std::uint64_t seed, int lo = 0, int hi = 255) {
  Rng rng(seed);
  Frame f(w, h, ColorSpace::Rgb8);
  for (auto& p : f.pixels) p = static_cast<std::uint8_t>(lo + static_cast<int>(rng.below(static_cast<std::size_t>(hi - lo + 1))));
  return f;
}

inline Frame solid_frame(std::size_t w, std::size_t h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Frame f(w, h, ColorSpace::Rgb8);
  for (std::size_t i = 0; i < w * h; ++i) {
    f.pixels[3 * i] = r;
    f.pixels[3 * i + 1] = g;
    f.pixels[3 * i + 2] = b;
  }
  return f;
}

inline Frame gray_image(std::size_t w, std::size_t h, const std::function<int(std::size_t, std::size_t)>& value) {
  Frame f(w, h, ColorSpace::Gray8);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) f.at(x, y) = static_cast<std::uint8_t>(std::clamp(value(x, y), 0, 255));
  return f;
}

// Textured checkerboard: cells alternate between a dark and a bright noisy
// band, so the frame passes default brightness and entropy filters.
inline Frame textured_checkerboard(std::size_t size, std::size_t cell, std::uint64_t seed) {
  Rng rng(seed);
  Frame f(size, size, ColorSpace::Rgb8);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      bool dark = ((x / cell) + (y / cell)) % 2 == 0;
      int base = dark ? 40 : 170;
      auto v = static_cast<std::uint8_t>(base + static_cast<int>(rng.below(60)));
      for (std::size_t c = 0; c < 3; ++c) f.at(x, y, c) = v;
    }
  }
  return f;
}

// 3x3 box blur with edge clamping, any channel count.
inline Frame box_blur(const Frame& f) {
  Frame out = f;
  const auto W = static_cast<long>(f.width), H = static_cast<long>(f.height);
  for (long y = 0; y < H; ++y) {
    for (long x = 0; x < W; ++x) {
      for (std::size_t c = 0; c < f.channels(); ++c) {
        int sum = 0;
        for (long dy = -1; dy <= 1; ++dy)
          for (long dx = -1; dx <= 1; ++dx) {
            long sx = std::clamp(x + dx, 0L, W - 1), sy = std::clamp(y + dy, 0L, H - 1);
            sum += f.at(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy), c);
          }
        out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), c) = static_cast<std::uint8_t>((sum + 4) / 9);
      }
    }
  }
  return out;
}

template <class T>
BasicTensor<T> random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  BasicTensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// ---------------------------------------------------------------------------
// Oracles

// sRGB -> L*u*v* evaluated in long double straight from the CIE definitions.
struct LuvOracle {
  long double L, u, v;
};
inline LuvOracle luv_oracle(int r8, int g8, int b8) {
  auto lin = [](int c8) {
    long double c = c8 / 255.0L;
    return c <= 0.04045L ? c / 12.92L : std::pow((c + 0.055L) / 1.055L, 2.4L);
  };
  long double r = lin(r8), g = lin(g8), b = lin(b8);
  long double X = 0.4124564L * r + 0.3575761L * g + 0.1804375L * b;
  long double Y = 0.2126729L * r + 0.7151522L * g + 0.0721750L * b;
  long double Z = 0.0193339L * r + 0.1191920L * g + 0.9503041L * b;
  long double Xn = 0.95047L, Yn = 1.0L, Zn = 1.08883L;
  long double yr = Y / Yn;
  long double L = yr > 216.0L / 24389.0L ? 116.0L * std::cbrt(yr) - 16.0L : 903.3L * yr;
  long double dn = Xn + 15 * Yn + 3 * Zn, d = X + 15 * Y + 3 * Z;
  long double un = 4 * Xn / dn, vn = 9 * Yn / dn;
  long double up = d > 0 ? 4 * X / d : un, vp = d > 0 ? 9 * Y / d : vn;
  return {L, 13 * L * (up - un), 13 * L * (vp - vn)};
}

// Per-output-pixel bilinear evaluation (half-pixel centres, edge clamp).
inline double bilinear_oracle(const Frame& f, std::size_t out_w, std::size_t out_h, std::size_t x, std::size_t y,
                              std::size_t c) {
  auto coord = [](std::size_t o, std::size_t in, std::size_t out) {
    double s = (o + 0.5) * (double(in) / double(out)) - 0.5;
    return std::min(std::max(s, 0.0), double(in - 1));
  };
  double sx = coord(x, f.width, out_w), sy = coord(y, f.height, out_h);
  auto x0 = static_cast<std::size_t>(sx), y0 = static_cast<std::size_t>(sy);
  std::size_t x1 = std::min(x0 + 1, f.width - 1), y1 = std::min(y0 + 1, f.height - 1);
  double fx = sx - x0, fy = sy - y0;
  double v00 = f.at(x0, y0, c), v10 = f.at(x1, y0, c), v01 = f.at(x0, y1, c), v11 = f.at(x1, y1, c);
  return v00 * (1 - fx) * (1 - fy) + v10 * fx * (1 - fy) + v01 * (1 - fx) * fy + v11 * fx * fy;
}

inline double laplacian_variance_oracle(const Frame& g) {
  const int kernel[3][3] = {{0, 1, 0}, {1, -4, 1}, {0, 1, 0}};
  std::vector<double> responses;
  for (std::size_t y = 1; y + 1 < g.height; ++y)
    for (std::size_t x = 1; x + 1 < g.width; ++x) {
      double r = 0;
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) r += kernel[ky][kx] * g.at(x + kx - 1, y + ky - 1);
      responses.push_back(r);
    }
  double mean = 0;
  for (double r : responses) mean += r;
  mean /= responses.size();
  double var = 0;
  for (double r : responses) var += (r - mean) * (r - mean);
  return var / responses.size();
}

inline double mean_abs_diff_oracle(const LuvFrame& a, const LuvFrame& b) {
  double s = 0;
  for (std::size_t y = 0; y < a.height; ++y)
    for (std::size_t x = 0; x < a.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) s += std::fabs(double(a.at(x, y, c)) - double(b.at(x, y, c)));
  return s / (a.width * a.height * 3);
}

// Six nested loops over (oy, ox, f, ky, kx, c).
template <class T>
BasicTensor<double> conv2d_oracle(const BasicTensor<T>& in, const BasicTensor<T>& w, const BasicTensor<T>& b,
                                  std::size_t stride, bool same) {
  long H = in.dim(0), W = in.dim(1), C = in.dim(2), KH = w.dim(0), KW = w.dim(1), F = w.dim(3);
  long OH, OW, pt = 0, pl = 0;
  if (same) {
    OH = (H + stride - 1) / stride;
    OW = (W + stride - 1) / stride;
    pt = std::max(0L, (OH - 1) * long(stride) + KH - H) / 2;
    pl = std::max(0L, (OW - 1) * long(stride) + KW - W) / 2;
  } else {
    OH = (H - KH) / stride + 1;
    OW = (W - KW) / stride + 1;
  }
  BasicTensor<double> out({std::size_t(OH), std::size_t(OW), std::size_t(F)});
  for (long oy = 0; oy < OH; ++oy)
    for (long ox = 0; ox < OW; ++ox)
      for (long f = 0; f < F; ++f) {
        double acc = b[f];
        for (long ky = 0; ky < KH; ++ky)
          for (long kx = 0; kx < KW; ++kx)
            for (long c = 0; c < C; ++c) {
              long iy = oy * stride + ky - pt, ix = ox * stride + kx - pl;
              if (iy < 0 || ix < 0 || iy >= H || ix >= W) continue;
              acc += double(in[(iy * W + ix) * C + c]) * double(w[((ky * KW + kx) * C + c) * F + f]);
            }
        out[(oy * OW + ox) * F + f] = acc;
      }
  return out;
}

template <class T>
BasicTensor<double> pool_oracle(const BasicTensor<T>& in, std::size_t ph, std::size_t pw, bool take_max) {
  std::size_t OH = in.dim(0) / ph, OW = in.dim(1) / pw, C = in.dim(2);
  BasicTensor<double> out({OH, OW, C});
  for (std::size_t oy = 0; oy < OH; ++oy)
    for (std::size_t ox = 0; ox < OW; ++ox)
      for (std::size_t c = 0; c < C; ++c) {
        std::vector<double> window;
        for (std::size_t dy = 0; dy < ph; ++dy)
          for (std::size_t dx = 0; dx < pw; ++dx) window.push_back(in(oy * ph + dy, ox * pw + dx, c));
        double v = 0;
        if (take_max) {
          v = *std::max_element(window.begin(), window.end());
        } else {
          for (double x : window) v += x;
          v /= window.size();
        }
        out(oy, ox, c) = v;
      }
  return out;
}

template <class T>
BasicTensor<double> dense_oracle(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b) {
  std::size_t n = x.size(), m = b.size();
  BasicTensor<double> out({m});
  for (std::size_t j = 0; j < m; ++j) {
    double acc = b[j];
    for (std::size_t i = 0; i < n; ++i) acc += double(x[i]) * double(w[i * m + j]);
    out[j] = acc;
  }
  return out;
}

template <class A, class B>
double max_abs_diff(const BasicTensor<A>& a, const BasicTensor<B>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(double(a[i]) - double(b[i])));
  return m;
}

// ---------------------------------------------------------------------------
// Finite differences

// |analytic - numeric| / max(|analytic|, |numeric|, floor). The floor keeps
// coordinates whose true gradient is ~0 from dividing noise by noise.
inline constexpr double kGradientFloor = 1e-3;

inline double relative_error(double analytic, double numeric) {
  return std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), kGradientFloor});
}

// Piecewise-linear layers (ReLU, max pool) make the loss non-differentiable
// where an activation changes sign or a pooling argmax switches. A central
// difference straddling such a point measures a secant, not the gradient, so
// coordinates whose +/-h evaluations change the activation pattern are
// reported separately instead of compared.
inline std::vector<std::uint8_t> activation_pattern(const ForwardTrace<double>& trace) {
  std::vector<std::uint8_t> pattern;
  auto add_cache = [&](const LayerCache<double>& c) {
    for (std::size_t i : c.argmax) {
      pattern.push_back(static_cast<std::uint8_t>(i & 0xFF));
      pattern.push_back(static_cast<std::uint8_t>((i >> 8) & 0xFF));
    }
    for (double v : c.input.values()) pattern.push_back(v > 0.0);
  };
  for (const auto& frame : trace.frames)
    for (const auto& c : frame) add_cache(c);
  for (const auto& c : trace.head) add_cache(c);
  return pattern;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_at_kinks = 0;
};

// Central differences (step h) of cross_entropy(forward(params)) for every
// parameter coordinate, compared to `backward`.
inline GradCheck check_model_gradients(const ModelSpec& spec, const BasicParameters<double>& params,
                                       const std::vector<BasicTensor<double>>& frames, std::size_t target,
                                       std::uint64_t seed, double h = 1e-3) {
  auto analytic = backward(spec, params, frames, target, Mode::Train, seed);
  auto base_pattern = activation_pattern(forward_trace(spec, params, frames, Mode::Train, seed));
  GradCheck result;
  BasicParameters<double> p = params;
  for (std::size_t t = 0; t < p.size(); ++t) {
    for (std::size_t i = 0; i < p[t].size(); ++i) {
      const double original = p[t][i];
      p[t][i] = original + h;
      auto plus = forward_trace(spec, p, frames, Mode::Train, seed);
      p[t][i] = original - h;
      auto minus = forward_trace(spec, p, frames, Mode::Train, seed);
      p[t][i] = original;
      if (activation_pattern(plus) != base_pattern || activation_pattern(minus) != base_pattern) {
        ++result.skipped_at_kinks;
        continue;
      }
      double numeric = (cross_entropy(plus.probs, target) - cross_entropy(minus.probs, target)) / (2 * h);
      result.max_rel_error = std::max(result.max_rel_error, relative_error(analytic.params[t][i], numeric));
      ++result.checked;
    }
  }
  return result;
}

// Numeric gradient of a scalar function w.r.t. every entry of `x`.
inline BasicTensor<double> numeric_gradient(const std::function<double()>& f, BasicTensor<double>& x,
                                            double h = 1e-3) {
  BasicTensor<double> g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double original = x[i];
    x[i] = original + h;
    const double plus = f();
    x[i] = original - h;
    const double minus = f();
    x[i] = original;
    g[i] = (plus - minus) / (2 * h);
  }
  return g;
}

inline double max_relative_error(const BasicTensor<double>& analytic, const BasicTensor<double>& numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) worst = std::max(worst, relative_error(analytic[i], numeric[i]));
  return worst;
}

// Weighted sum of a layer output: a scalar loss with a known upstream gradient.
inline double project(const BasicTensor<double>& out, const BasicTensor<double>& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * weights[i];
  return s;
}

// Values bounded away from zero (ReLU kink) by at least `gap`.
inline BasicTensor<double> away_from_zero(std::vector<std::size_t> shape, std::uint64_t seed, double gap = 0.05) {
  Rng rng(seed);
  BasicTensor<double> t(std::move(shape));
  for (auto& v : t.values()) {
    double m = rng.uniform(gap, 1.0);
    v = rng.uniform() < 0.5 ? -m : m;
  }
  return t;
}

// Distinct values spaced 0.01 apart in random order, so no pooling window
// has a near-tie.
inline BasicTensor<double> distinct_values(std::vector<std::size_t> shape, std::uint64_t seed) {
  BasicTensor<double> t(std::move(shape));
  std::vector<std::size_t> order(t.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.01 * static_cast<double>(order[i]) - 0.5;
  return t;
}

struct LayerGradientErrors {
  double conv = 0, relu = 0, avg_pool = 0, max_pool = 0, dropout = 0, dense = 0, softmax_ce = 0, lstm = 0;

  double worst() const { return std::max({conv, relu, avg_pool, max_pool, dropout, dense, softmax_ce, lstm}); }
};

// Central-difference check of every layer's backward pass in isolation on a
// seeded random case. Each entry is the max relative error over all inputs
// and parameters of that layer.
inline LayerGradientErrors layer_gradient_errors(std::uint64_t seed, double h = 1e-3) {
  LayerGradientErrors e;
  Rng rng(seed);
  auto sub = [&](std::uint64_t k) { return derive_seed(seed, k); };

  {  // conv2d: random geometry, both paddings, stride 1 or 2
    std::size_t H = 4 + rng.below(4), W = 4 + rng.below(4), C = 1 + rng.below(3), F = 1 + rng.below(3);
    std::size_t stride = 1 + rng.below(2);
    Padding pad = rng.uniform() < 0.5 ? Padding::Same : Padding::Valid;
    auto x = random_tensor<double>({H, W, C}, sub(1));
    auto w = random_tensor<double>({3, 3, C, F}, sub(2));
    auto b = random_tensor<double>({F}, sub(3));
    auto out = conv2d(x, w, b, stride, pad);
    auto r = random_tensor<double>(out.shape(), sub(4));
    auto g = conv2d_backward(x, w, r, stride, pad);
    auto loss = [&] { return project(conv2d(x, w, b, stride, pad), r); };
    e.conv = std::max({max_relative_error(g.input, numeric_gradient(loss, x, h)),
                       max_relative_error(g.weights, numeric_gradient(loss, w, h)),
                       max_relative_error(g.bias, numeric_gradient(loss, b, h))});
  }
  {  // relu
    auto x = away_from_zero({3, 4, 2}, sub(5));
    auto r = random_tensor<double>(x.shape(), sub(6));
    auto g = relu_backward(x, r);
    e.relu = max_relative_error(g, numeric_gradient([&] { return project(relu(x), r); }, x, h));
  }
  {  // pooling
    auto x = distinct_values({4, 6, 2}, sub(7));
    auto r = random_tensor<double>({2, 3, 2}, sub(8));
    auto ga = avg_pool_backward(x.shape(), r, 2, 2);
    e.avg_pool = max_relative_error(ga, numeric_gradient([&] { return project(avg_pool(x, 2, 2), r); }, x, h));
    auto gm = max_pool_backward(x.shape(), r, max_pool(x, 2, 2).argmax);
    e.max_pool =
        max_relative_error(gm, numeric_gradient([&] { return project(max_pool(x, 2, 2).output, r); }, x, h));
  }
  {  // dropout, train mode with a fixed mask seed
    auto x = random_tensor<double>({20}, sub(9));
    auto r = random_tensor<double>({20}, sub(10));
    auto mask_seed = sub(11);
    auto g = dropout_backward(r, dropout(x, 0.5, Mode::Train, mask_seed).scale);
    e.dropout = max_relative_error(
        g, numeric_gradient([&] { return project(dropout(x, 0.5, Mode::Train, mask_seed).output, r); }, x, h));
  }
  {  // dense
    std::size_t n = 2 + rng.below(6), m = 1 + rng.below(5);
    auto x = random_tensor<double>({n}, sub(12));
    auto w = random_tensor<double>({n, m}, sub(13));
    auto b = random_tensor<double>({m}, sub(14));
    auto r = random_tensor<double>({m}, sub(15));
    auto g = dense_backward(x, w, r);
    auto loss = [&] { return project(dense(x, w, b), r); };
    e.dense = std::max({max_relative_error(g.input, numeric_gradient(loss, x, h)),
                        max_relative_error(g.weights, numeric_gradient(loss, w, h)),
                        max_relative_error(g.bias, numeric_gradient(loss, b, h))});
  }
  {  // softmax + cross-entropy w.r.t. logits
    std::size_t n = 2 + rng.below(5), target = rng.below(n);
    auto z = random_tensor<double>({n}, sub(16), -2.0, 2.0);
    auto g = softmax_cross_entropy_grad(softmax(z), target);
    e.softmax_ce =
        max_relative_error(g, numeric_gradient([&] { return cross_entropy(softmax(z), target); }, z, h));
  }
  {  // one LSTM step, loss on both h' and c'
    std::size_t d = 1 + rng.below(4), k = 1 + rng.below(4);
    auto x = random_tensor<double>({d}, sub(17));
    auto hp = random_tensor<double>({k}, sub(18));
    auto cp = random_tensor<double>({k}, sub(19));
    LstmParams<double> p{random_tensor<double>({d, 4 * k}, sub(20)), random_tensor<double>({k, 4 * k}, sub(21)),
                         random_tensor<double>({4 * k}, sub(22))};
    auto rh = random_tensor<double>({k}, sub(23));
    auto rc = random_tensor<double>({k}, sub(24));
    auto step = lstm_step(x, hp, cp, p);
    LstmParams<double> grads{BasicTensor<double>(p.W.shape()), BasicTensor<double>(p.U.shape()),
                             BasicTensor<double>(p.b.shape())};
    auto g = lstm_step_backward(step, p, rh, rc, grads);
    auto loss = [&] {
      auto s = lstm_step(x, hp, cp, p);
      return project(s.h, rh) + project(s.c, rc);
    };
    e.lstm = std::max({max_relative_error(g.x, numeric_gradient(loss, x, h)),
                       max_relative_error(g.h_prev, numeric_gradient(loss, hp, h)),
                       max_relative_error(g.c_prev, numeric_gradient(loss, cp, h)),
                       max_relative_error(grads.W, numeric_gradient(loss, p.W, h)),
                       max_relative_error(grads.U, numeric_gradient(loss, p.U, h)),
                       max_relative_error(grads.b, numeric_gradient(loss, p.b, h))});
  }
  return e;
}

// The composed tiny model (8x8 input, 2 filters, LSTM hidden 3, 2 classes)
// on a seeded 3-frame sequence.
inline GradCheck tiny_model_gradient_check(std::uint64_t seed) {
  const ModelSpec spec = tiny_model(2);
  auto params = init_parameters<double>(spec, seed);
  std::vector<BasicTensor<double>> frames;
  for (std::uint64_t f = 0; f < 3; ++f) frames.push_back(random_tensor<double>({8, 8, 3}, derive_seed(seed, 100 + f), 0.0, 1.0));
  return check_model_gradients(spec, params, frames, seed % 2, derive_seed(seed, 7));
}

}  // namespace vcc::test
