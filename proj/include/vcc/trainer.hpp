#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vcc/model.hpp"
#include "vcc/rng.hpp"

namespace vcc {

struct Sample {
  std::string id;
  std::vector<Tensor> frames;  // keyframe sequence, each [H, W, C]
  std::size_t label = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> classes;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }

  void validate() const {
    std::vector<std::size_t> shape;
    for (const auto& s : samples) {
      if (s.label >= classes.size()) fail(ErrorCode::BadIndex, s.id + ": label out of range");
      if (s.frames.empty()) fail(ErrorCode::EmptySequence, s.id + ": no frames");
      for (const auto& f : s.frames) {
        if (shape.empty()) shape = f.shape();
        if (f.shape() != shape) fail(ErrorCode::ShapeMismatch, s.id + ": frame shapes differ");
      }
    }
  }
};

struct TrainConfig {
  double split_ratio = 0.8;
  std::size_t batch_size = 128;
  std::size_t epochs = 15;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 42;

  void validate() const {
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) fail(ErrorCode::InvalidArgument, "split ratio must be in (0,1)");
    if (batch_size < 1) fail(ErrorCode::InvalidArgument, "batch size must be >= 1");
    if (epochs < 1) fail(ErrorCode::InvalidArgument, "epochs must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      fail(ErrorCode::InvalidArgument, "learning rate must be finite and >= 0");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) fail(ErrorCode::InvalidArgument, "momentum must be in [0,1)");
  }
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_accuracy;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::optional<double> final_val_accuracy;  // nullopt when trained without a validation set
};

// Stratified per-class split: each class is shuffled independently (classes
// visited in label order, one generator) and its first floor(ratio * count)
// members go to the training side.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorCode::InvalidArgument, "split ratio must be in (0,1)");
  if (d.size() < 2) fail(ErrorCode::TooFewSamples, "split needs at least 2 samples");
  std::vector<std::vector<std::size_t>> by_class(d.classes.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.samples[i].label >= d.classes.size()) fail(ErrorCode::BadIndex, "label out of range");
    by_class[d.samples[i].label].push_back(i);
  }
  Dataset train{{}, d.classes}, val{{}, d.classes};
  Rng rng(derive_seed(seed, 0x73706C6974ULL));
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < 2) {
      fail(ErrorCode::TooFewSamples, "class " + d.classes[c] + " has a single sample");
    }
    rng.shuffle(std::span<std::size_t>(members));
    const auto cut = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(members.size())));
    for (std::size_t j = 0; j < members.size(); ++j) {
      (j < cut ? train : val).samples.push_back(d.samples[members[j]]);
    }
  }
  return {std::move(train), std::move(val)};
}

// Argmax with ties going to the lowest index.
template <class T>
std::size_t argmax(const BasicTensor<T>& t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] > t[best]) best = i;
  }
  return best;
}

inline double evaluate(const ModelSpec& spec, const Parameters& params, const Dataset& d) {
  if (d.empty()) fail(ErrorCode::EmptyDataset, "evaluate on empty dataset");
  std::size_t correct = 0;
  for (const auto& s : d.samples) {
    if (argmax(forward(spec, params, s.frames)) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(d.size());
}

using EpochCallback = std::function<void(const EpochStats&)>;

// Mini-batch SGD with momentum (v = mu v - lr g; w += v) on the batch-mean
// gradient. Training order is reshuffled every epoch; the returned parameters
// are those after the last epoch.
inline std::pair<Parameters, TrainReport> train(const ModelSpec& spec, const Dataset& train_set,
                                                const Dataset& val_set, const TrainConfig& cfg,
                                                const EpochCallback& on_epoch = {}) {
  cfg.validate();
  plan_model(spec);
  if (train_set.empty()) fail(ErrorCode::EmptyDataset, "no training samples");
  if (train_set.classes != spec.classes || (!val_set.empty() && val_set.classes != spec.classes)) {
    fail(ErrorCode::InvalidArgument, "dataset classes differ from model classes");
  }
  train_set.validate();
  val_set.validate();

  Parameters params = init_parameters<float>(spec, cfg.seed);
  std::vector<std::vector<double>> velocity;
  for (const auto& p : params) velocity.emplace_back(p.size(), 0.0);

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffler(derive_seed(cfg.seed, 0x73687566ULL));

  TrainReport report;
  std::uint64_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffler.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::vector<double>> grad_sum;
      for (const auto& p : params) grad_sum.emplace_back(p.size(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const Sample& s = train_set.samples[order[b]];
        auto g = backward(spec, params, s.frames, s.label, Mode::Train, derive_seed(cfg.seed, ++step));
        loss_sum += g.loss;
        if (argmax(g.probs) == s.label) ++correct;
        for (std::size_t p = 0; p < params.size(); ++p) {
          for (std::size_t i = 0; i < params[p].size(); ++i) grad_sum[p][i] += g.params[p][i];
        }
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p].size(); ++i) {
          velocity[p][i] = cfg.momentum * velocity[p][i] - cfg.learning_rate * grad_sum[p][i] * inv;
          params[p][i] = static_cast<float>(params[p][i] + velocity[p][i]);
        }
        require_finite(params[p], "SGD update");
      }
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(train_set.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_set.size());
    if (!val_set.empty()) stats.val_accuracy = evaluate(spec, params, val_set);
    report.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  report.final_val_accuracy = report.epochs.back().val_accuracy;
  return {std::move(params), std::move(report)};
}

// Splits with cfg.split_ratio and trains on the training side.
inline std::pair<Parameters, TrainReport> train(const ModelSpec& spec, const Dataset& d, const TrainConfig& cfg,
                                                const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (d.empty()) fail(ErrorCode::EmptyDataset, "no samples");
  auto [train_set, val_set] = split_dataset(d, cfg.split_ratio, cfg.seed);
  return train(spec, train_set, val_set, cfg, on_epoch);
}

}  // namespace vcc
