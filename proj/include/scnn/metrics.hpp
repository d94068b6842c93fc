#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "scnn/errors.hpp"

namespace scnn {

inline constexpr double kProbClamp = 1e-12;

inline double clamp_probability(double p) {
  if (p < kProbClamp) return kProbClamp;
  if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
  return p;
}

// -[y ln p + (1-y) ln(1-p)] on the clamped probability. Exact hits report
// exactly zero; everything else is strictly positive and finite.
inline double bce_loss(double p, int y) {
  if (p == static_cast<double>(y)) return 0.0;
  const double pc = clamp_probability(p);
  return y == 1 ? -std::log(pc) : -std::log(1.0 - pc);
}

// dLoss/dp = (p - y) / (p (1 - p)), clamped the same way as the loss.
inline double bce_grad(double p, int y) {
  const double pc = clamp_probability(p);
  return (pc - static_cast<double>(y)) / (pc * (1.0 - pc));
}

inline int classify(double p, double threshold = 0.5) {
  if (!(threshold > 0.0) || !(threshold < 1.0)) {
    throw config_error("classify: threshold " + std::to_string(threshold) +
                       " outside (0, 1)");
  }
  return p >= threshold ? 1 : 0;
}

inline std::vector<int> classify(const std::vector<double>& probs,
                                 double threshold = 0.5) {
  std::vector<int> out;
  out.reserve(probs.size());
  for (double p : probs) out.push_back(classify(p, threshold));
  return out;
}

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  double accuracy() const {
    return static_cast<double>(tp + tn) / static_cast<double>(total());
  }
};

inline ConfusionMatrix confusion(const std::vector<int>& predictions,
                                 const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) {
    throw consistency_error("confusion: " + std::to_string(predictions.size()) +
                            " predictions vs " + std::to_string(labels.size()) +
                            " labels");
  }
  if (predictions.empty()) {
    throw consistency_error("confusion: no samples");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      predictions[i] == 1 ? ++cm.tp : ++cm.fn;
    } else {
      predictions[i] == 1 ? ++cm.fp : ++cm.tn;
    }
  }
  return cm;
}

// Rows are actual classes, columns predicted ones.
inline std::string confusion_table(const ConfusionMatrix& cm) {
  auto cell = [](std::size_t v) {
    std::string s = std::to_string(v);
    return std::string(12 > s.size() ? 12 - s.size() : 0, ' ') + s;
  };
  std::string out;
  out += "              predicted 0  predicted 1\n";
  out += "actual 0    " + cell(cm.tn) + cell(cm.fp) + "\n";
  out += "actual 1    " + cell(cm.fn) + cell(cm.tp) + "\n";
  return out;
}

inline std::string confusion_csv(const ConfusionMatrix& cm) {
  return "tp,fp,tn,fn\n" + std::to_string(cm.tp) + "," + std::to_string(cm.fp) +
         "," + std::to_string(cm.tn) + "," + std::to_string(cm.fn) + "\n";
}

// One row of a training history; validation fields stay empty when there is
// no validation split.
struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_accuracy;
};

using TrainingHistory = std::vector<EpochRecord>;

}  // namespace scnn
