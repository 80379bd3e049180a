#pragma once

// Model description, parameter initialisation, and the per-sequence forward
// and backward passes: a CNN stack applied to each keyframe, an LSTM over the
// resulting feature sequence, then a dense head and softmax.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "vcc/layers.hpp"
#include "vcc/rng.hpp"
#include "vcc/tensor.hpp"

namespace vcc {

namespace layer {
struct Conv {
  std::size_t filters = 8;
  std::size_t kernel_h = 3;
  std::size_t kernel_w = 3;
  std::size_t stride = 1;
  Padding padding = Padding::Same;
};
struct Relu {};
struct MaxPool {
  std::size_t h = 2, w = 2;
};
struct AvgPool {
  std::size_t h = 2, w = 2;
};
struct Dropout {
  double rate = 0.5;
};
struct Dense {
  std::size_t units = 1;
};
struct Lstm {
  std::size_t hidden = 32;
};
struct Softmax {};
}  // namespace layer

using LayerSpec = std::variant<layer::Conv, layer::Relu, layer::MaxPool, layer::AvgPool, layer::Dropout,
                               layer::Dense, layer::Lstm, layer::Softmax>;

struct ModelSpec {
  std::size_t input_h = 224;
  std::size_t input_w = 224;
  std::size_t input_c = 3;
  std::vector<LayerSpec> layers;
  std::vector<std::string> classes;

  std::vector<std::size_t> input_shape() const { return {input_h, input_w, input_c}; }
};

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

// Conv(8) ReLU MaxPool Conv(16) ReLU AvgPool Dense(64) ReLU Dropout(0.5) | LSTM(32) | Dense(n) Softmax
inline ModelSpec default_model(std::vector<std::string> classes, std::size_t input_size = 224) {
  ModelSpec spec;
  spec.input_h = spec.input_w = input_size;
  spec.layers = {layer::Conv{8},   layer::Relu{},          layer::MaxPool{}, layer::Conv{16},
                 layer::Relu{},    layer::AvgPool{},       layer::Dense{64}, layer::Relu{},
                 layer::Dropout{}, layer::Lstm{32},        layer::Dense{classes.size()},
                 layer::Softmax{}};
  spec.classes = std::move(classes);
  return spec;
}

// Same roster at gradient-check scale: 8x8 input, 2 filters, LSTM hidden 3.
inline ModelSpec tiny_model(std::size_t class_count = 2) {
  ModelSpec spec;
  spec.input_h = spec.input_w = 8;
  spec.layers = {layer::Conv{2},   layer::Relu{},    layer::MaxPool{}, layer::Conv{2},
                 layer::Relu{},    layer::AvgPool{}, layer::Dense{4},  layer::Relu{},
                 layer::Dropout{}, layer::Lstm{3},   layer::Dense{class_count},
                 layer::Softmax{}};
  for (std::size_t i = 0; i < class_count; ++i) spec.classes.push_back("class" + std::to_string(i));
  return spec;
}

// ---------------------------------------------------------------------------
// Static shape checking

struct LayerPlan {
  std::vector<std::size_t> in, out;
  std::size_t first_param = 0;
  std::size_t param_count = 0;
};

struct ModelPlan {
  std::vector<LayerPlan> layers;
  std::size_t lstm_index = 0;
  std::vector<std::vector<std::size_t>> param_shapes;
};

inline ModelPlan plan_model(const ModelSpec& spec) {
  auto bad = [](const std::string& why) { fail(ErrorCode::InvalidSpec, why); };
  if (spec.input_h == 0 || spec.input_w == 0 || spec.input_c == 0) bad("input shape must be non-zero");
  if (spec.classes.empty()) bad("no class labels");
  if (spec.layers.empty() || !std::holds_alternative<layer::Softmax>(spec.layers.back())) {
    bad("last layer must be softmax");
  }

  ModelPlan plan;
  std::vector<std::size_t> shape = spec.input_shape();
  bool seen_lstm = false;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    LayerPlan lp;
    lp.in = shape;
    lp.first_param = plan.param_shapes.size();
    const std::string where = "layer " + std::to_string(li) + ": ";
    auto add_param = [&](std::vector<std::size_t> s) { plan.param_shapes.push_back(std::move(s)); };
    std::visit(
        overloaded{
            [&](const layer::Conv& c) {
              if (seen_lstm || shape.size() != 3) bad(where + "conv needs a spatial input");
              if (c.filters == 0) bad(where + "conv needs >= 1 filter");
              ConvGeometry g;
              try {
                g = conv_geometry(shape[0], shape[1], c.kernel_h, c.kernel_w, c.stride, c.padding);
              } catch (const Error& e) {
                bad(where + e.message());
              }
              add_param({c.kernel_h, c.kernel_w, shape[2], c.filters});
              add_param({c.filters});
              shape = {g.out_h, g.out_w, c.filters};
            },
            [&](const layer::Relu&) {},
            [&](const auto& p) requires(std::is_same_v<std::decay_t<decltype(p)>, layer::MaxPool> ||
                                        std::is_same_v<std::decay_t<decltype(p)>, layer::AvgPool>) {
              if (seen_lstm || shape.size() != 3) bad(where + "pooling needs a spatial input");
              if (p.h == 0 || p.w == 0 || shape[0] % p.h || shape[1] % p.w) {
                bad(where + "pool window does not divide " + shape_string(shape));
              }
              shape = {shape[0] / p.h, shape[1] / p.w, shape[2]};
            },
            [&](const layer::Dropout& d) {
              if (!(d.rate >= 0.0 && d.rate < 1.0)) bad(where + "dropout rate must be in [0,1)");
            },
            [&](const layer::Dense& d) {
              if (d.units == 0) bad(where + "dense needs >= 1 unit");
              add_param({shape_size(shape), d.units});
              add_param({d.units});
              shape = {d.units};
            },
            [&](const layer::Lstm& l) {
              if (seen_lstm) bad(where + "only one LSTM layer is supported");
              if (l.hidden == 0) bad(where + "LSTM needs >= 1 hidden unit");
              seen_lstm = true;
              plan.lstm_index = li;
              std::size_t d = shape_size(shape);
              add_param({d, 4 * l.hidden});
              add_param({l.hidden, 4 * l.hidden});
              add_param({4 * l.hidden});
              shape = {l.hidden};
            },
            [&](const layer::Softmax&) {
              if (li + 1 != spec.layers.size()) bad(where + "softmax must be the last layer");
            },
        },
        spec.layers[li]);
    lp.out = shape;
    lp.param_count = plan.param_shapes.size() - lp.first_param;
    plan.layers.push_back(std::move(lp));
  }
  if (!seen_lstm) bad("model needs an LSTM layer");
  const auto& logits = spec.layers[spec.layers.size() - 2];
  if (spec.layers.size() < 2 || !std::holds_alternative<layer::Dense>(logits)) {
    bad("softmax must follow a dense layer");
  }
  if (std::get<layer::Dense>(logits).units != spec.classes.size()) {
    bad("final dense has " + std::to_string(std::get<layer::Dense>(logits).units) + " units for " +
        std::to_string(spec.classes.size()) + " classes");
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Text descriptor (stored in checkpoints)

inline std::string describe(const ModelSpec& spec) {
  std::ostringstream out;
  out << "input " << spec.input_h << ' ' << spec.input_w << ' ' << spec.input_c << '\n';
  for (const auto& l : spec.layers) {
    std::visit(overloaded{
                   [&](const layer::Conv& c) {
                     out << "conv " << c.filters << ' ' << c.kernel_h << ' ' << c.kernel_w << ' ' << c.stride
                         << ' ' << (c.padding == Padding::Same ? "same" : "valid") << '\n';
                   },
                   [&](const layer::Relu&) { out << "relu\n"; },
                   [&](const layer::MaxPool& p) { out << "maxpool " << p.h << ' ' << p.w << '\n'; },
                   [&](const layer::AvgPool& p) { out << "avgpool " << p.h << ' ' << p.w << '\n'; },
                   [&](const layer::Dropout& d) {
                     char buf[32];
                     std::snprintf(buf, sizeof buf, "%.17g", d.rate);
                     out << "dropout " << buf << '\n';
                   },
                   [&](const layer::Dense& d) { out << "dense " << d.units << '\n'; },
                   [&](const layer::Lstm& l) { out << "lstm " << l.hidden << '\n'; },
                   [&](const layer::Softmax&) { out << "softmax\n"; },
               },
               l);
  }
  out << "classes";
  for (const auto& c : spec.classes) out << ' ' << c;
  out << '\n';
  return out.str();
}

inline ModelSpec parse_descriptor(const std::string& text) {
  auto bad = [](const std::string& why) { fail(ErrorCode::DescriptorShapeMismatch, why); };
  ModelSpec spec;
  std::istringstream lines(text);
  std::string line;
  bool have_input = false, have_classes = false;
  while (std::getline(lines, line)) {
    std::istringstream in(line);
    std::string kind;
    if (!(in >> kind)) continue;
    auto need = [&](auto&... values) {
      if (!((in >> values) && ...)) bad("malformed descriptor line: " + line);
    };
    if (kind == "input") {
      need(spec.input_h, spec.input_w, spec.input_c);
      have_input = true;
    } else if (kind == "conv") {
      layer::Conv c;
      std::string pad;
      need(c.filters, c.kernel_h, c.kernel_w, c.stride, pad);
      if (pad != "same" && pad != "valid") bad("unknown padding " + pad);
      c.padding = pad == "same" ? Padding::Same : Padding::Valid;
      spec.layers.push_back(c);
    } else if (kind == "relu") {
      spec.layers.push_back(layer::Relu{});
    } else if (kind == "maxpool") {
      layer::MaxPool p;
      need(p.h, p.w);
      spec.layers.push_back(p);
    } else if (kind == "avgpool") {
      layer::AvgPool p;
      need(p.h, p.w);
      spec.layers.push_back(p);
    } else if (kind == "dropout") {
      layer::Dropout d;
      need(d.rate);
      spec.layers.push_back(d);
    } else if (kind == "dense") {
      layer::Dense d;
      need(d.units);
      spec.layers.push_back(d);
    } else if (kind == "lstm") {
      layer::Lstm l;
      need(l.hidden);
      spec.layers.push_back(l);
    } else if (kind == "softmax") {
      spec.layers.push_back(layer::Softmax{});
    } else if (kind == "classes") {
      std::string label;
      while (in >> label) spec.classes.push_back(label);
      have_classes = true;
    } else {
      bad("unknown descriptor entry: " + kind);
    }
  }
  if (!have_input || !have_classes) bad("descriptor lacks input or classes line");
  try {
    plan_model(spec);
  } catch (const Error& e) {
    bad(e.message());
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Parameters

template <class T>
using BasicParameters = std::vector<BasicTensor<T>>;
using Parameters = BasicParameters<float>;

template <class T>
BasicParameters<T> zero_parameters(const ModelSpec& spec) {
  BasicParameters<T> params;
  for (const auto& shape : plan_model(spec).param_shapes) params.emplace_back(shape);
  return params;
}

// Glorot-uniform weights, zero biases.
template <class T>
BasicParameters<T> init_parameters(const ModelSpec& spec, std::uint64_t seed) {
  const ModelPlan plan = plan_model(spec);
  BasicParameters<T> params = zero_parameters<T>(spec);
  Rng rng(derive_seed(seed, 0x6C6F7261ULL));
  auto glorot = [&](BasicTensor<T>& t, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (T& v : t.values()) v = static_cast<T>(rng.uniform(-limit, limit));
  };
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const LayerPlan& lp = plan.layers[li];
    std::visit(overloaded{
                   [&](const layer::Conv& c) {
                     double area = static_cast<double>(c.kernel_h * c.kernel_w);
                     glorot(params[lp.first_param], area * static_cast<double>(lp.in[2]),
                            area * static_cast<double>(c.filters));
                   },
                   [&](const layer::Dense& d) {
                     glorot(params[lp.first_param], static_cast<double>(shape_size(lp.in)),
                            static_cast<double>(d.units));
                   },
                   [&](const layer::Lstm& l) {
                     double gates = 4.0 * static_cast<double>(l.hidden);
                     glorot(params[lp.first_param], static_cast<double>(shape_size(lp.in)), gates);
                     glorot(params[lp.first_param + 1], static_cast<double>(l.hidden), gates);
                   },
                   [](const auto&) {},
               },
               spec.layers[li]);
  }
  return params;
}

template <class T, class U>
BasicParameters<U> cast_parameters(const BasicParameters<T>& params) {
  BasicParameters<U> out;
  for (const auto& t : params) out.push_back(t.template cast<U>());
  return out;
}

// ---------------------------------------------------------------------------
// Forward / backward

template <class T>
struct LayerCache {
  BasicTensor<T> input;
  std::vector<std::size_t> argmax;  // max pool
  std::vector<T> scale;             // dropout
};

template <class T>
struct ForwardTrace {
  std::vector<std::vector<LayerCache<T>>> frames;  // [frame][layer before the LSTM]
  std::vector<LstmStep<T>> steps;
  std::vector<LayerCache<T>> head;  // layers between the LSTM and softmax
  BasicTensor<T> logits;
  BasicTensor<T> probs;
};

namespace detail {

inline constexpr std::uint64_t kHeadStream = 0xFFFFFFFFULL;

template <class T>
BasicTensor<T> apply_layer(const LayerSpec& spec, const LayerPlan& lp, const BasicParameters<T>& params,
                           const BasicTensor<T>& input, LayerCache<T>& cache, Mode mode, std::uint64_t seed) {
  cache.input = input;
  return std::visit(
      overloaded{
          [&](const layer::Conv& c) {
            return conv2d(input, params[lp.first_param], params[lp.first_param + 1], c.stride, c.padding);
          },
          [&](const layer::Relu&) { return relu(input); },
          [&](const layer::MaxPool& p) {
            auto r = max_pool(input, p.h, p.w);
            cache.argmax = std::move(r.argmax);
            return std::move(r.output);
          },
          [&](const layer::AvgPool& p) { return avg_pool(input, p.h, p.w); },
          [&](const layer::Dropout& d) {
            auto r = dropout(input, d.rate, mode, seed);
            cache.scale = std::move(r.scale);
            return std::move(r.output);
          },
          [&](const layer::Dense&) { return dense(input, params[lp.first_param], params[lp.first_param + 1]); },
          [&](const auto&) -> BasicTensor<T> { fail(ErrorCode::InvalidSpec, "layer cannot be applied here"); },
      },
      spec);
}

// Returns the gradient w.r.t. the layer input; parameter gradients are added
// into `grads`.
template <class T>
BasicTensor<T> backprop_layer(const LayerSpec& spec, const LayerPlan& lp, const BasicParameters<T>& params,
                              const LayerCache<T>& cache, const BasicTensor<T>& grad_out,
                              BasicParameters<T>& grads) {
  auto accumulate = [](BasicTensor<T>& into, const BasicTensor<T>& g) {
    for (std::size_t i = 0; i < into.size(); ++i) into[i] += g[i];
  };
  return std::visit(
      overloaded{
          [&](const layer::Conv& c) {
            auto g = conv2d_backward(cache.input, params[lp.first_param], grad_out, c.stride, c.padding);
            accumulate(grads[lp.first_param], g.weights);
            accumulate(grads[lp.first_param + 1], g.bias);
            return std::move(g.input);
          },
          [&](const layer::Relu&) { return relu_backward(cache.input, grad_out); },
          [&](const layer::MaxPool&) { return max_pool_backward(cache.input.shape(), grad_out, cache.argmax); },
          [&](const layer::AvgPool& p) { return avg_pool_backward(cache.input.shape(), grad_out, p.h, p.w); },
          [&](const layer::Dropout&) { return dropout_backward(grad_out, cache.scale); },
          [&](const layer::Dense&) {
            auto g = dense_backward(cache.input, params[lp.first_param], grad_out);
            accumulate(grads[lp.first_param], g.weights);
            accumulate(grads[lp.first_param + 1], g.bias);
            return g.input.reshaped(cache.input.shape());
          },
          [&](const auto&) -> BasicTensor<T> { fail(ErrorCode::InvalidSpec, "layer cannot be differentiated here"); },
      },
      spec);
}

template <class T>
LstmParams<T> lstm_view(const BasicParameters<T>& params, const LayerPlan& lp) {
  return {params[lp.first_param], params[lp.first_param + 1], params[lp.first_param + 2]};
}

}  // namespace detail

// Runs the network on a keyframe sequence, keeping every intermediate needed
// by `backward`. Dropout masks derive from `seed` (per frame, per layer).
template <class T>
ForwardTrace<T> forward_trace(const ModelSpec& spec, const BasicParameters<T>& params,
                              const std::vector<BasicTensor<T>>& frames, Mode mode = Mode::Infer,
                              std::uint64_t seed = 0) {
  const ModelPlan plan = plan_model(spec);
  if (params.size() != plan.param_shapes.size()) {
    fail(ErrorCode::ShapeMismatch, "expected " + std::to_string(plan.param_shapes.size()) + " parameter tensors, got " +
                                       std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) require_shape(params[i], plan.param_shapes[i], "parameter");
  if (frames.empty()) fail(ErrorCode::EmptySequence, "no keyframes");

  ForwardTrace<T> trace;
  const std::size_t L = plan.lstm_index;
  const LstmParams<T> lstm = detail::lstm_view(params, plan.layers[L]);
  const std::size_t hidden = plan.layers[L].out[0];
  BasicTensor<T> h({hidden}), c({hidden});
  for (std::size_t t = 0; t < frames.size(); ++t) {
    require_shape(frames[t], spec.input_shape(), "keyframe");
    std::vector<LayerCache<T>> caches(L);
    BasicTensor<T> x = frames[t];
    for (std::size_t li = 0; li < L; ++li) {
      x = detail::apply_layer(spec.layers[li], plan.layers[li], params, x, caches[li], mode,
                              derive_seed(derive_seed(seed, t), li));
    }
    trace.frames.push_back(std::move(caches));
    trace.steps.push_back(lstm_step(x.reshaped({x.size()}), h, c, lstm));
    h = trace.steps.back().h;
    c = trace.steps.back().c;
  }

  BasicTensor<T> y = h;
  const std::size_t last = spec.layers.size() - 1;
  trace.head.resize(last - L - 1);
  for (std::size_t li = L + 1; li < last; ++li) {
    y = detail::apply_layer(spec.layers[li], plan.layers[li], params, y, trace.head[li - L - 1], mode,
                            derive_seed(derive_seed(seed, detail::kHeadStream), li));
  }
  trace.logits = std::move(y);
  trace.probs = softmax(trace.logits);
  require_finite(trace.probs, "forward");
  return trace;
}

// Class distribution for one keyframe sequence.
template <class T>
BasicTensor<T> forward(const ModelSpec& spec, const BasicParameters<T>& params,
                       const std::vector<BasicTensor<T>>& frames, Mode mode = Mode::Infer, std::uint64_t seed = 0) {
  return forward_trace(spec, params, frames, mode, seed).probs;
}

template <class T>
struct Gradients {
  double loss = 0.0;
  BasicTensor<T> probs;
  BasicParameters<T> params;  // same layout as the model parameters
};

// Exact gradients of cross_entropy(forward(...), target) for every parameter.
template <class T>
Gradients<T> backward(const ModelSpec& spec, const BasicParameters<T>& params,
                      const std::vector<BasicTensor<T>>& frames, std::size_t target, Mode mode = Mode::Train,
                      std::uint64_t seed = 0) {
  const ModelPlan plan = plan_model(spec);
  ForwardTrace<T> trace = forward_trace(spec, params, frames, mode, seed);
  Gradients<T> out;
  out.loss = cross_entropy(trace.probs, target);
  out.probs = trace.probs;
  out.params = zero_parameters<T>(spec);

  const std::size_t L = plan.lstm_index;
  const std::size_t last = spec.layers.size() - 1;
  BasicTensor<T> g = softmax_cross_entropy_grad(trace.probs, target);
  for (std::size_t li = last; li-- > L + 1;) {
    g = detail::backprop_layer(spec.layers[li], plan.layers[li], params, trace.head[li - L - 1], g, out.params);
  }

  const LstmParams<T> lstm = detail::lstm_view(params, plan.layers[L]);
  LstmParams<T> lstm_grads = detail::lstm_view(out.params, plan.layers[L]);
  BasicTensor<T> dh = g, dc(g.shape());
  for (std::size_t t = frames.size(); t-- > 0;) {
    LstmStepGrads<T> step = lstm_step_backward(trace.steps[t], lstm, dh, dc, lstm_grads);
    dh = std::move(step.h_prev);
    dc = std::move(step.c_prev);
    BasicTensor<T> gx = std::move(step.x);
    for (std::size_t li = L; li-- > 0;) {
      const LayerCache<T>& cache = trace.frames[t][li];
      if (li + 1 == L) gx = gx.reshaped(plan.layers[li].out);
      gx = detail::backprop_layer(spec.layers[li], plan.layers[li], params, cache, gx, out.params);
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    out.params[plan.layers[L].first_param + i] = std::move(i == 0 ? lstm_grads.W : i == 1 ? lstm_grads.U : lstm_grads.b);
  }
  for (const auto& t : out.params) require_finite(t, "backward");
  return out;
}

}  // namespace vcc
