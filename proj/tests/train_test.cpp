#include "scnn/train.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scnn/dataset.hpp"
#include "scnn/errors.hpp"
#include "scnn/metrics.hpp"
#include "scnn/model.hpp"
#include "scnn/pgm.hpp"
#include "scnn/rng.hpp"
#include "scnn/tensor.hpp"

namespace scnn {
namespace {

// 8x8 two-class set the reduced stack can learn in a few epochs: vertical
// stripes against flat gray, both with light noise.
Dataset toy_dataset(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    Tensor img = Tensor::zeros({8, 8, 1});
    for (std::size_t r = 0; r < 8; ++r) {
      for (std::size_t c = 0; c < 8; ++c) {
        double v = label ? (c % 2 ? 0.85 : 0.15) : 0.5;
        v += rng.uniform(-0.05, 0.05);
        img[r * 8 + c] = v < 0.0 ? 0.0 : v > 1.0 ? 1.0 : v;
      }
    }
    ds.samples.push_back({img, label, "toy_" + std::to_string(i)});
  }
  return ds;
}

TrainConfig toy_config(std::uint64_t seed = 3) {
  TrainConfig c;
  c.architecture = small_architecture(Activation::relu);
  c.input_shape = small_input_shape();
  c.seed = seed;
  c.epochs = 4;
  c.batch_size = 4;
  c.hyper.alpha = 0.01;
  return c;
}

TEST(TrainConfigValidation, RejectsBadKnobs) {
  TrainConfig c = toy_config();
  c.epochs = 0;
  EXPECT_THROW(c.validate(), config_error);
  c = toy_config();
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), config_error);
  c = toy_config();
  c.threshold = 1.0;
  EXPECT_THROW(c.validate(), config_error);
  c = toy_config();
  c.zoom_range = 1.0;
  EXPECT_THROW(c.validate(), config_error);
  c = toy_config();
  c.first_activation = Activation::sigmoid;
  EXPECT_THROW(c.validate(), config_error);
  c = toy_config();
  c.first_activation = Activation::leaky_relu;
  c.leaky_slope = 1.5;
  EXPECT_THROW(c.validate(), config_error);
  c = toy_config();
  c.hyper.alpha = 0.0;
  EXPECT_THROW(c.validate(), config_error);
  EXPECT_NO_THROW(toy_config().validate());
}

TEST(Train, HistoryCoversEveryEpochInOrder) {
  const Dataset train_set = toy_dataset(8, 1);
  const Dataset val_set = toy_dataset(4, 2);
  TrainConfig c = toy_config();
  c.epochs = 5;
  const TrainResult r = train(c, train_set, val_set);
  ASSERT_EQ(r.history.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r.history[i].epoch, i + 1);
    EXPECT_TRUE(r.history[i].val_loss.has_value());
    EXPECT_TRUE(r.history[i].val_accuracy.has_value());
  }
}

TEST(Train, EmptyValidationSetLeavesValFieldsUnset) {
  const TrainResult r = train(toy_config(), toy_dataset(6, 1), Dataset{});
  for (const auto& rec : r.history) {
    EXPECT_FALSE(rec.val_loss.has_value());
    EXPECT_FALSE(rec.val_accuracy.has_value());
  }
}

TEST(Train, RejectsEmptyTrainingSet) {
  EXPECT_THROW(train(toy_config(), Dataset{}, Dataset{}), input_error);
}

TEST(Train, OversizedBatchEqualsExactFit) {
  // Both configs see one batch per epoch, so the runs must be bit-identical.
  const Dataset train_set = toy_dataset(6, 4);
  TrainConfig a = toy_config();
  a.batch_size = 6;
  TrainConfig b = toy_config();
  b.batch_size = 64;
  const TrainResult ra = train(a, train_set, Dataset{});
  const TrainResult rb = train(b, train_set, Dataset{});
  for (std::size_t i = 0; i < ra.model.params().size(); ++i) {
    EXPECT_TRUE(bit_equal(ra.model.params()[i].value,
                          rb.model.params()[i].value));
  }
  EXPECT_EQ(history_csv(ra.history), history_csv(rb.history));
}

TEST(Train, RerunsAreBitIdentical) {
  const Dataset train_set = toy_dataset(8, 5);
  const Dataset val_set = toy_dataset(4, 6);
  const TrainResult a = train(toy_config(), train_set, val_set);
  const TrainResult b = train(toy_config(), train_set, val_set);
  ASSERT_EQ(a.model.params().size(), b.model.params().size());
  for (std::size_t i = 0; i < a.model.params().size(); ++i) {
    EXPECT_TRUE(bit_equal(a.model.params()[i].value,
                          b.model.params()[i].value));
  }
  EXPECT_EQ(history_csv(a.history), history_csv(b.history));
}

TEST(Train, SeedChangesTheRun) {
  const Dataset train_set = toy_dataset(8, 5);
  const TrainResult a = train(toy_config(3), train_set, Dataset{});
  const TrainResult b = train(toy_config(4), train_set, Dataset{});
  bool all_same = true;
  for (std::size_t i = 0; i < a.model.params().size(); ++i) {
    all_same = all_same && bit_equal(a.model.params()[i].value,
                                     b.model.params()[i].value);
  }
  EXPECT_FALSE(all_same);
}

TEST(Train, LossFallsOnLearnableData) {
  // The 2-filter stack is narrow enough that some inits go fully dead; this
  // seed learns the stripe-vs-flat split to 100% within 13 epochs.
  const Dataset train_set = toy_dataset(16, 7);
  TrainConfig c = toy_config(3);
  c.epochs = 16;
  const TrainResult r = train(c, train_set, Dataset{});
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
  EXPECT_GE(r.history.back().train_accuracy, 0.75);
}

TEST(Train, AugmentationChangesTheRunButStillTrains) {
  const Dataset train_set = toy_dataset(8, 9);
  TrainConfig plain = toy_config();
  TrainConfig zoomed = toy_config();
  zoomed.zoom_range = 0.2;
  const TrainResult a = train(plain, train_set, Dataset{});
  const TrainResult b = train(zoomed, train_set, Dataset{});
  ASSERT_EQ(b.history.size(), plain.epochs);
  bool all_same = true;
  for (std::size_t i = 0; i < a.model.params().size(); ++i) {
    all_same = all_same && bit_equal(a.model.params()[i].value,
                                     b.model.params()[i].value);
  }
  EXPECT_FALSE(all_same) << "zoom had no effect on training";
}

TEST(Train, EpochCallbackSeesEveryRecord) {
  std::vector<std::size_t> seen;
  TrainConfig c = toy_config();
  c.epochs = 3;
  train(c, toy_dataset(4, 1), Dataset{},
        [&](const EpochRecord& rec) { seen.push_back(rec.epoch); });
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3}));
}

TEST(Evaluate, ZeroedModelPredictsHalfEverywhere) {
  Model model =
      Model::build(small_architecture(Activation::relu), small_input_shape(), 1);
  for (auto& p : model.params()) {
    for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = 0.0;
  }
  const Dataset ds = toy_dataset(8, 3);  // 4 positives, 4 negatives
  const EvalResult r = evaluate(model, ds, 0.5);
  // p = 0.5 everywhere; 0.5 >= threshold classifies as positive.
  EXPECT_DOUBLE_EQ(r.loss, std::log(2.0));
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_EQ(r.confusion.tp, 4u);
  EXPECT_EQ(r.confusion.fp, 4u);
  EXPECT_EQ(r.confusion.tn, 0u);
  EXPECT_EQ(r.confusion.fn, 0u);

  const EvalResult strict = evaluate(model, ds, 0.9);
  EXPECT_DOUBLE_EQ(strict.accuracy, 0.5);
  EXPECT_EQ(strict.confusion.tn, 4u);
  EXPECT_EQ(strict.confusion.fn, 4u);
}

TEST(Evaluate, RejectsEmptyDataset) {
  const Model model =
      Model::build(small_architecture(Activation::relu), small_input_shape(), 1);
  EXPECT_THROW(evaluate(model, Dataset{}, 0.5), input_error);
}

TEST(HistoryCsv, ExactRendering) {
  TrainingHistory h;
  h.push_back({1, 0.5, 0.75, std::nullopt, std::nullopt});
  h.push_back({2, 0.25, 1.0, 0.125, 0.5});
  EXPECT_EQ(history_csv(h),
            "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n"
            "1,0.5,0.75,,\n"
            "2,0.25,1,0.125,0.5\n");
}

TEST(HistoryCsv, FormatDoubleRoundTrips) {
  const double values[] = {0.1, 1.0 / 3.0, 1e-12, 123456.789, 0.0};
  for (double v : values) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(HistoryCsv, WritesFile) {
  const auto dir = std::filesystem::temp_directory_path() / "scnn_train_test";
  std::filesystem::create_directories(dir);
  TrainingHistory h;
  h.push_back({1, 0.5, 1.0, std::nullopt, std::nullopt});
  write_history_csv(h, dir / "metrics.csv");
  const auto bytes = read_file_bytes(dir / "metrics.csv");
  EXPECT_EQ(std::string(bytes.begin(), bytes.end()), history_csv(h));
  EXPECT_THROW(write_history_csv(h, dir / "missing" / "metrics.csv"), io_error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace scnn
