#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "scnn/dataset.hpp"
#include "scnn/errors.hpp"
#include "scnn/image_ops.hpp"
#include "scnn/metrics.hpp"
#include "scnn/model.hpp"
#include "scnn/optimizers.hpp"
#include "scnn/rng.hpp"
#include "scnn/tensor.hpp"

namespace scnn {

// Everything a run depends on. Two runs with equal configs and equal datasets
// produce bit-identical models, histories, and checkpoints.
struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::adam;
  Activation first_activation = Activation::relu;
  double leaky_slope = 0.01;
  double zoom_range = 0.0;  // 0 disables augmentation
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  HyperParams hyper;
  double threshold = 0.5;

  // Empty means the stock 100x100 stack; tests swap in smaller ones.
  std::vector<LayerSpec> architecture;
  Shape input_shape;

  void validate() const {
    if (first_activation == Activation::sigmoid) {
      throw config_error("train: sigmoid is the output activation, not a "
                         "first-layer choice");
    }
    if (first_activation == Activation::leaky_relu) {
      check_leaky_slope(leaky_slope);
    }
    if (!(zoom_range >= 0.0) || zoom_range >= 1.0) {
      throw config_error("train: zoom range " + std::to_string(zoom_range) +
                         " outside [0, 1)");
    }
    if (epochs < 1) throw config_error("train: epoch count must be >= 1");
    if (batch_size < 1) throw config_error("train: batch size must be >= 1");
    if (!(threshold > 0.0) || !(threshold < 1.0)) {
      throw config_error("train: threshold " + std::to_string(threshold) +
                         " outside (0, 1)");
    }
    hyper.validate();
  }

  std::vector<LayerSpec> resolved_architecture() const {
    if (!architecture.empty()) return architecture;
    return default_architecture(first_activation, leaky_slope);
  }
  Shape resolved_input_shape() const {
    if (!input_shape.empty()) return input_shape;
    return default_input_shape();
  }
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
};

inline EvalResult evaluate(const Model& model, const Dataset& dataset,
                           double threshold = 0.5) {
  if (dataset.samples.empty()) {
    throw input_error("evaluate: dataset is empty");
  }
  std::vector<double> probs;
  std::vector<int> labels;
  probs.reserve(dataset.size());
  labels.reserve(dataset.size());
  double loss_sum = 0.0;
  for (const Sample& s : dataset.samples) {
    const double p = model_forward(model, s.image).probability;
    loss_sum += bce_loss(p, s.label);
    probs.push_back(p);
    labels.push_back(s.label);
  }
  EvalResult r;
  r.loss = loss_sum / static_cast<double>(dataset.size());
  r.confusion = confusion(classify(probs, threshold), labels);
  r.accuracy = r.confusion.accuracy();
  return r;
}

struct TrainResult {
  Model model;
  TrainingHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch gradient descent over shuffled epochs. Per epoch: reshuffle with
// its own derived seed, optionally re-augment (training images only, fresh
// draws every epoch), one optimizer step per batch on the mean gradient, then
// score the un-augmented train and validation sets. An empty validation set
// just leaves the val columns blank.
inline TrainResult train(const TrainConfig& config, const Dataset& train_set,
                         const Dataset& val_set,
                         const EpochCallback& on_epoch = {}) {
  config.validate();
  if (train_set.samples.empty()) {
    throw input_error("train: training set is empty");
  }

  TrainResult out;
  out.model = Model::build(config.resolved_architecture(),
                           config.resolved_input_shape(), config.seed);
  OptimizerState opt_state =
      OptimizerState::for_model(config.optimizer, out.model, config.hyper);

  const std::size_t n = train_set.samples.size();
  std::vector<std::size_t> order(n);
  ParamGrads grads = zero_grads_like(out.model);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(config.seed, Stream::epoch_shuffle, epoch));
    shuffle_rng.shuffle(order);
    Rng zoom_rng(derive_seed(config.seed, Stream::zoom, epoch));

    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop =
          start + config.batch_size < n ? start + config.batch_size : n;
      for (auto& g : grads) {
        for (std::size_t i = 0; i < g.value.size(); ++i) g.value[i] = 0.0;
      }
      for (std::size_t b = start; b < stop; ++b) {
        const Sample& s = train_set.samples[order[b]];
        const Tensor img =
            config.zoom_range > 0.0
                ? random_zoom(s.image, config.zoom_range, zoom_rng)
                : s.image;
        const ForwardPass fp = model_forward(out.model, img);
        model_backward_accumulate(out.model, fp,
                                  bce_grad(fp.probability, s.label), grads);
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (auto& g : grads) {
        for (std::size_t i = 0; i < g.value.size(); ++i) g.value[i] *= scale;
      }
      optimizer_step(out.model, grads, opt_state);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const EvalResult train_eval =
        evaluate(out.model, train_set, config.threshold);
    rec.train_loss = train_eval.loss;
    rec.train_accuracy = train_eval.accuracy;
    if (!val_set.samples.empty()) {
      const EvalResult val_eval = evaluate(out.model, val_set, config.threshold);
      rec.val_loss = val_eval.loss;
      rec.val_accuracy = val_eval.accuracy;
    }
    out.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return out;
}

// Shortest decimal form that parses back to the same double, so metric files
// are byte-stable across runs.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string history_csv(const TrainingHistory& history) {
  std::string out = "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
  for (const EpochRecord& r : history) {
    out += std::to_string(r.epoch);
    out += ',';
    out += format_double(r.train_loss);
    out += ',';
    out += format_double(r.train_accuracy);
    out += ',';
    if (r.val_loss) out += format_double(*r.val_loss);
    out += ',';
    if (r.val_accuracy) out += format_double(*r.val_accuracy);
    out += '\n';
  }
  return out;
}

inline void write_history_csv(const TrainingHistory& history,
                              const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw io_error("cannot open " + path.string() + " for writing");
  }
  f << history_csv(history);
  if (!f) throw io_error("failed writing " + path.string());
}

}  // namespace scnn
