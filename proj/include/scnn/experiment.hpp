#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "scnn/checkpoint.hpp"
#include "scnn/dataset.hpp"
#include "scnn/errors.hpp"
#include "scnn/metrics.hpp"
#include "scnn/model.hpp"
#include "scnn/optimizers.hpp"
#include "scnn/train.hpp"

namespace scnn {

// Four-variant sweep over one dataset: the optimizer, the first-layer
// activation, and augmentation change; everything else (seed, split, epochs,
// batches) is held fixed so the rows are comparable.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double train_fraction = 0.7;
  double threshold = 0.5;
  double leaky_slope = 0.01;
  double zoom_range = 0.2;  // augmented variant only
  HyperParams hyper;

  // Test hooks; empty means the stock 100x100 stack.
  std::vector<LayerSpec> architecture;
  Shape input_shape;

  void validate() const {
    SplitSpec{train_fraction, seed}.validate();
    TrainConfig probe = base_train_config();
    probe.zoom_range = zoom_range;
    probe.validate();
  }

  TrainConfig base_train_config() const {
    TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = batch_size;
    tc.seed = seed;
    tc.hyper = hyper;
    tc.threshold = threshold;
    tc.leaky_slope = leaky_slope;
    tc.architecture = architecture;
    tc.input_shape = input_shape;
    return tc;
  }
};

struct ExperimentVariant {
  std::string name;
  OptimizerKind optimizer = OptimizerKind::adam;
  Activation first_activation = Activation::relu;
  double zoom_range = 0.0;
  std::string notes;
};

inline std::vector<ExperimentVariant> experiment_variants(
    const ExperimentConfig& config) {
  return {
      {"model1", OptimizerKind::rmsprop, Activation::relu, 0.0,
       "rmsprop + relu"},
      {"model2", OptimizerKind::adam, Activation::relu, 0.0, "adam + relu"},
      {"model3", OptimizerKind::adam, Activation::leaky_relu, 0.0,
       "adam + leaky relu first layer"},
      {"model4", OptimizerKind::adam, Activation::relu, config.zoom_range,
       "adam + relu + zoom " + format_double(config.zoom_range)},
  };
}

struct ExperimentRow {
  std::string model;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::string notes;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::vector<TrainingHistory> histories;  // one per variant, same order
};

inline std::string experiment_summary_csv(
    const std::vector<ExperimentRow>& rows) {
  std::string out = "model,train_acc,val_acc,train_loss,val_loss,notes\n";
  for (const ExperimentRow& r : rows) {
    out += r.model;
    out += ',';
    out += format_double(r.train_acc);
    out += ',';
    out += format_double(r.val_acc);
    out += ',';
    out += format_double(r.train_loss);
    out += ',';
    out += format_double(r.val_loss);
    out += ',';
    out += r.notes;
    out += '\n';
  }
  return out;
}

inline std::string experiment_summary_table(
    const std::vector<ExperimentRow>& rows) {
  const char* headers[] = {"model",      "train_acc", "val_acc",
                           "train_loss", "val_loss",  "notes"};
  std::vector<std::vector<std::string>> cells;
  for (const ExperimentRow& r : rows) {
    cells.push_back({r.model, format_double(r.train_acc),
                     format_double(r.val_acc), format_double(r.train_loss),
                     format_double(r.val_loss), r.notes});
  }
  std::size_t width[6];
  for (std::size_t c = 0; c < 6; ++c) {
    width[c] = std::string(headers[c]).size();
    for (const auto& row : cells) {
      if (row[c].size() > width[c]) width[c] = row[c].size();
    }
  }
  auto emit_row = [&](const std::vector<std::string>& row, std::string& out) {
    for (std::size_t c = 0; c < 6; ++c) {
      out += row[c];
      if (c + 1 < 6) out += std::string(width[c] - row[c].size() + 2, ' ');
    }
    out += '\n';
  };
  std::string out;
  emit_row({headers[0], headers[1], headers[2], headers[3], headers[4],
            headers[5]},
           out);
  for (const auto& row : cells) emit_row(row, out);
  return out;
}

using VariantEpochCallback =
    std::function<void(const std::string& variant, const EpochRecord&)>;

// Splits once, trains all four variants on the identical split, and leaves
// per-variant metric files plus checkpoints and a summary in out_dir:
//   model{1..4}_metrics.csv, model{1..4}.ckpt, summary.csv
inline ExperimentResult run_experiment(
    const ExperimentConfig& config, const Dataset& dataset,
    const std::filesystem::path& out_dir,
    const VariantEpochCallback& on_epoch = {}) {
  config.validate();
  auto [train_set, val_set] = split(dataset, {config.train_fraction,
                                              config.seed});
  if (val_set.samples.empty()) {
    throw input_error(
        "experiment: validation split is empty; lower the train fraction");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw io_error("cannot create " + out_dir.string() + ": " + ec.message());
  }

  ExperimentResult result;
  for (const ExperimentVariant& variant : experiment_variants(config)) {
    TrainConfig tc = config.base_train_config();
    tc.optimizer = variant.optimizer;
    tc.first_activation = variant.first_activation;
    tc.zoom_range = variant.zoom_range;

    EpochCallback cb;
    if (on_epoch) {
      cb = [&](const EpochRecord& rec) { on_epoch(variant.name, rec); };
    }
    TrainResult tr = train(tc, train_set, val_set, cb);

    write_history_csv(tr.history,
                      out_dir / (variant.name + "_metrics.csv"));
    save_checkpoint(tr.model, config.epochs,
                    out_dir / (variant.name + ".ckpt"));

    const EpochRecord& last = tr.history.back();
    result.rows.push_back({variant.name, last.train_accuracy,
                           last.val_accuracy.value(), last.train_loss,
                           last.val_loss.value(), variant.notes});
    result.histories.push_back(std::move(tr.history));
  }

  std::ofstream f(out_dir / "summary.csv", std::ios::binary);
  if (!f) {
    throw io_error("cannot open " + (out_dir / "summary.csv").string() +
                   " for writing");
  }
  f << experiment_summary_csv(result.rows);
  if (!f) {
    throw io_error("failed writing " + (out_dir / "summary.csv").string());
  }
  return result;
}

}  // namespace scnn
