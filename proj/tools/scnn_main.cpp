#include <cinttypes>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scnn/checkpoint.hpp"
#include "scnn/dataset.hpp"
#include "scnn/errors.hpp"
#include "scnn/experiment.hpp"
#include "scnn/grad_check.hpp"
#include "scnn/image_ops.hpp"
#include "scnn/metrics.hpp"
#include "scnn/model.hpp"
#include "scnn/optimizers.hpp"
#include "scnn/pgm.hpp"
#include "scnn/rng.hpp"
#include "scnn/train.hpp"

namespace {

struct SynthArgs {
  std::string out;
  std::size_t n_per_class = 375;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  std::string manifest;
  std::string out;
  std::uint64_t seed = 0;
  std::string optimizer = "adam";
  std::string activation = "relu";
  double leaky_slope = 0.01;
  double zoom = 0.0;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double lr = 0.001;
  double threshold = 0.5;
  double train_fraction = 0.7;
};

struct ExperimentArgs {
  std::string manifest;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double lr = 0.001;
  double threshold = 0.5;
  double train_fraction = 0.7;
  double leaky_slope = 0.01;
  double zoom = 0.2;
};

struct EvalArgs {
  std::string checkpoint;
  std::string manifest;
  double threshold = 0.5;
};

struct PredictArgs {
  std::string checkpoint;
  std::vector<std::string> images;
  double threshold = 0.5;
};

struct GradcheckArgs {
  std::uint64_t seed = 1;
  bool inject_bug = false;
};

scnn::OptimizerKind parse_optimizer(const std::string& s) {
  return s == "rmsprop" ? scnn::OptimizerKind::rmsprop
                        : scnn::OptimizerKind::adam;
}

scnn::Activation parse_activation(const std::string& s) {
  return s == "leaky-relu" ? scnn::Activation::leaky_relu
                           : scnn::Activation::relu;
}

void print_epoch(const std::string& prefix, std::size_t total,
                 const scnn::EpochRecord& r) {
  if (r.val_loss) {
    std::printf("%sepoch %zu/%zu: train loss %.4f acc %.4f | val loss %.4f "
                "acc %.4f\n",
                prefix.c_str(), r.epoch, total, r.train_loss, r.train_accuracy,
                *r.val_loss, *r.val_accuracy);
  } else {
    std::printf("%sepoch %zu/%zu: train loss %.4f acc %.4f\n", prefix.c_str(),
                r.epoch, total, r.train_loss, r.train_accuracy);
  }
  std::fflush(stdout);
}

int run_synth(const SynthArgs& a) {
  const scnn::Dataset ds = scnn::generate_synthetic(a.n_per_class, a.seed);
  const auto manifest = scnn::write_dataset(ds, a.out);
  std::printf("wrote %zu samples (%zu positive, %zu negative) under %s\n",
              ds.size(), ds.positives(), ds.negatives(), a.out.c_str());
  std::printf("manifest: %s\n", manifest.string().c_str());
  return 0;
}

int run_train(const TrainArgs& a) {
  const scnn::Dataset full = scnn::load_manifest(a.manifest);
  const auto [train_set, val_set] =
      scnn::split(full, {a.train_fraction, a.seed});
  std::printf("loaded %zu samples: %zu train, %zu val\n", full.size(),
              train_set.size(), val_set.size());

  scnn::TrainConfig config;
  config.optimizer = parse_optimizer(a.optimizer);
  config.first_activation = parse_activation(a.activation);
  config.leaky_slope = a.leaky_slope;
  config.zoom_range = a.zoom;
  config.epochs = a.epochs;
  config.batch_size = a.batch_size;
  config.seed = a.seed;
  config.hyper.alpha = a.lr;
  config.threshold = a.threshold;
  config.validate();

  const scnn::TrainResult result = scnn::train(
      config, train_set, val_set,
      [&](const scnn::EpochRecord& r) { print_epoch("", a.epochs, r); });

  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  if (ec) {
    throw scnn::io_error("cannot create " + a.out + ": " + ec.message());
  }
  const auto metrics_path = std::filesystem::path(a.out) / "metrics.csv";
  const auto ckpt_path = std::filesystem::path(a.out) / "model.ckpt";
  scnn::write_history_csv(result.history, metrics_path);
  scnn::save_checkpoint(result.model, a.epochs, ckpt_path);
  std::printf("metrics: %s\ncheckpoint: %s\n", metrics_path.string().c_str(),
              ckpt_path.string().c_str());
  return 0;
}

int run_experiment_cmd(const ExperimentArgs& a) {
  const scnn::Dataset full = scnn::load_manifest(a.manifest);

  scnn::ExperimentConfig config;
  config.seed = a.seed;
  config.epochs = a.epochs;
  config.batch_size = a.batch_size;
  config.train_fraction = a.train_fraction;
  config.threshold = a.threshold;
  config.leaky_slope = a.leaky_slope;
  config.zoom_range = a.zoom;
  config.hyper.alpha = a.lr;
  config.validate();

  std::printf("loaded %zu samples; training 4 variants for %zu epochs\n",
              full.size(), a.epochs);
  const scnn::ExperimentResult result = scnn::run_experiment(
      config, full, a.out,
      [&](const std::string& name, const scnn::EpochRecord& r) {
        print_epoch(name + " ", a.epochs, r);
      });

  std::printf("\n%s", scnn::experiment_summary_table(result.rows).c_str());
  std::printf("\nresults under %s (summary.csv, model*_metrics.csv, "
              "model*.ckpt)\n",
              a.out.c_str());
  return 0;
}

int run_eval(const EvalArgs& a) {
  const scnn::LoadedCheckpoint ckpt = scnn::load_checkpoint(a.checkpoint);
  const scnn::Dataset ds = scnn::load_manifest(a.manifest);
  const scnn::EvalResult r = scnn::evaluate(ckpt.model, ds, a.threshold);
  std::printf("%zu samples, threshold %g\n", ds.size(), a.threshold);
  std::printf("loss %.6f accuracy %.6f\n\n", r.loss, r.accuracy);
  std::printf("%s\n", scnn::confusion_table(r.confusion).c_str());
  std::printf("%s", scnn::confusion_csv(r.confusion).c_str());
  return 0;
}

int run_predict(const PredictArgs& a) {
  const scnn::LoadedCheckpoint ckpt = scnn::load_checkpoint(a.checkpoint);
  const scnn::Shape& in = ckpt.model.input_shape();
  int failures = 0;
  for (const std::string& path : a.images) {
    try {
      const scnn::Tensor img =
          scnn::resize_bilinear(scnn::load_pgm(path), in[0], in[1]);
      const double p = scnn::model_forward(ckpt.model, img).probability;
      std::printf("%s, %.6f, %d\n", path.c_str(), p,
                  scnn::classify(p, a.threshold));
    } catch (const scnn::error& e) {
      std::fprintf(stderr, "%s: %s\n", path.c_str(), e.what());
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}

int run_gradcheck(const GradcheckArgs& a) {
  constexpr double kTolerance = 1e-5;
  // Reduced stack: the same layer mix at 8x8, cheap enough for two forwards
  // per scalar parameter.
  std::printf("gradient check: 8x8 reduced stack, central differences, "
              "tolerance %g\n",
              kTolerance);

  double worst_overall = 0.0;
  scnn::GradCheckReport worst_report;
  std::uint64_t worst_seed = 0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    const std::uint64_t seed = a.seed + k;
    scnn::Model model = scnn::Model::build(
        scnn::small_architecture(k % 2 ? scnn::Activation::leaky_relu
                                       : scnn::Activation::relu),
        scnn::small_input_shape(), scnn::derive_seed(seed, scnn::Stream::param_init, 1));
    // A small positive bias keeps pre-activations off the exact relu kink
    // (where a two-sided difference quotient is wrong by construction) and
    // keeps enough units alive that gradient entries sit above the roundoff
    // floor of the difference quotient.
    for (auto& p : model.params()) {
      if (p.name.find("biases") != std::string::npos) {
        for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = 0.05;
      }
    }
    scnn::Rng rng(scnn::derive_seed(seed, scnn::Stream::param_init, 2));
    scnn::Tensor img = scnn::Tensor::zeros(scnn::small_input_shape());
    for (std::size_t i = 0; i < img.size(); ++i) {
      img[i] = rng.uniform(0.2, 0.8);
    }
    scnn::GradCheckOptions opts;
    opts.tamper = a.inject_bug && k == 0;
    const scnn::GradCheckReport report =
        scnn::grad_check(model, img, static_cast<int>(k % 2), opts);
    std::printf("seed %" PRIu64 ": max rel err %.3e (%s[%zu])\n", seed,
                report.max_relative_error, report.worst_param.c_str(),
                report.worst_index);
    if (report.max_relative_error > worst_overall) {
      worst_overall = report.max_relative_error;
      worst_report = report;
      worst_seed = seed;
    }
  }

  std::printf("\nper-parameter worst (seed %" PRIu64 "):\n", worst_seed);
  for (const auto& [name, err] : worst_report.per_param) {
    std::printf("  %-16s %.3e\n", name.c_str(), err);
  }
  const bool pass = worst_overall <= kTolerance;
  std::printf("\n%s: max relative error %.3e %s %g\n", pass ? "PASS" : "FAIL",
              worst_overall, pass ? "<=" : ">", kTolerance);
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary image classifier: train, evaluate, and inspect small "
               "CNNs on 100x100 grayscale images"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand(
      "synth", "Generate the deterministic two-class synthetic dataset");
  synth->add_option("--out", synth_args.out, "Output directory")->required();
  synth->add_option("--n-per-class", synth_args.n_per_class,
                    "Samples per class")->capture_default_str();
  synth->add_option("--seed", synth_args.seed, "Generator seed")->capture_default_str();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train one configuration");
  train->add_option("--manifest", train_args.manifest, "Dataset manifest CSV")
      ->required();
  train->add_option("--out", train_args.out, "Output directory")->required();
  train->add_option("--seed", train_args.seed, "Run seed")->capture_default_str();
  train->add_option("--optimizer", train_args.optimizer, "Optimizer")->capture_default_str()
      ->check(CLI::IsMember({"adam", "rmsprop"}));
  train
      ->add_option("--first-activation", train_args.activation,
                   "First conv activation")->capture_default_str()
      ->check(CLI::IsMember({"relu", "leaky-relu"}));
  train->add_option("--leaky-slope", train_args.leaky_slope,
                    "Leaky relu slope")->capture_default_str();
  train->add_option("--zoom", train_args.zoom, "Zoom augmentation range")->capture_default_str();
  train->add_option("--epochs", train_args.epochs, "Epochs")->capture_default_str();
  train->add_option("--batch-size", train_args.batch_size, "Batch size")->capture_default_str();
  train->add_option("--lr", train_args.lr, "Learning rate")->capture_default_str();
  train->add_option("--threshold", train_args.threshold,
                    "Classification threshold")->capture_default_str();
  train->add_option("--train-fraction", train_args.train_fraction,
                    "Train split fraction")->capture_default_str();

  ExperimentArgs exp_args;
  auto* experiment = app.add_subcommand(
      "experiment", "Train the four-variant comparison on one dataset");
  experiment
      ->add_option("--manifest", exp_args.manifest, "Dataset manifest CSV")
      ->required();
  experiment->add_option("--out", exp_args.out, "Output directory")
      ->required();
  experiment->add_option("--seed", exp_args.seed, "Run seed")->capture_default_str();
  experiment->add_option("--epochs", exp_args.epochs, "Epochs per variant")->capture_default_str();
  experiment->add_option("--batch-size", exp_args.batch_size, "Batch size")->capture_default_str();
  experiment->add_option("--lr", exp_args.lr, "Learning rate")->capture_default_str();
  experiment->add_option("--threshold", exp_args.threshold,
                         "Classification threshold")->capture_default_str();
  experiment->add_option("--train-fraction", exp_args.train_fraction,
                         "Train split fraction")->capture_default_str();
  experiment->add_option("--leaky-slope", exp_args.leaky_slope,
                         "Leaky relu slope (third variant)")->capture_default_str();
  experiment->add_option("--zoom", exp_args.zoom,
                         "Zoom range (fourth variant)")->capture_default_str();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval",
                                  "Score a checkpoint against a manifest");
  eval->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file")
      ->required();
  eval->add_option("--manifest", eval_args.manifest, "Dataset manifest CSV")
      ->required();
  eval->add_option("--threshold", eval_args.threshold,
                   "Classification threshold")->capture_default_str();

  PredictArgs predict_args;
  auto* predict = app.add_subcommand(
      "predict", "Classify individual PGM images with a checkpoint");
  predict
      ->add_option("--checkpoint", predict_args.checkpoint, "Checkpoint file")
      ->required();
  predict->add_option("--threshold", predict_args.threshold,
                      "Classification threshold")->capture_default_str();
  predict->add_option("images", predict_args.images, "PGM files to classify")
      ->required()
      ->expected(-1);

  GradcheckArgs gc_args;
  auto* gradcheck = app.add_subcommand(
      "gradcheck",
      "Compare analytic gradients against finite differences on a reduced "
      "model");
  gradcheck->add_option("--seed", gc_args.seed, "First of ten seeds")->capture_default_str();
  gradcheck->add_flag("--inject-bug", gc_args.inject_bug)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return run_synth(synth_args);
    if (train->parsed()) return run_train(train_args);
    if (experiment->parsed()) return run_experiment_cmd(exp_args);
    if (eval->parsed()) return run_eval(eval_args);
    if (predict->parsed()) return run_predict(predict_args);
    if (gradcheck->parsed()) return run_gradcheck(gc_args);
  } catch (const scnn::config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const scnn::error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
  return 2;
}
