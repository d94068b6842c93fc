#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "scnn/metrics.hpp"
#include "scnn/model.hpp"

namespace scnn {

struct GradCheckOptions {
  double step = 1e-6;  // central-difference h
  // Doubles one analytic gradient entry before comparing; proves the check
  // actually trips on a wrong backward pass.
  bool tamper = false;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  // Worst relative error within each parameter tensor, in parameter order.
  std::vector<std::pair<std::string, double>> per_param;
};

// Compares model_backward against central finite differences of the full
// BCE-through-forward loss, parameter by parameter. Relative error uses
// |a-n| / max(|a|, |n|, 1e-8). Cost is two forwards per scalar parameter, so
// this is meant for reduced architectures.
inline GradCheckReport grad_check(Model& model, const Tensor& image, int label,
                                  const GradCheckOptions& opts = {}) {
  const ForwardPass fp = model_forward(model, image);
  ParamGrads grads =
      model_backward(model, fp, bce_grad(fp.probability, label));
  if (opts.tamper) {
    // Corrupt the largest-magnitude entry so the fault cannot hide in a
    // dead unit whose gradient is already zero.
    double* worst = &grads[0].value[0];
    for (auto& g : grads) {
      for (std::size_t i = 0; i < g.value.size(); ++i) {
        if (std::fabs(g.value[i]) > std::fabs(*worst)) worst = &g.value[i];
      }
    }
    *worst *= 2.0;
  }

  GradCheckReport report;
  const double h = opts.step;
  for (std::size_t pi = 0; pi < model.params().size(); ++pi) {
    Tensor& param = model.params()[pi].value;
    const Tensor& grad = grads[pi].value;
    double param_worst = 0.0;
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double saved = param[i];
      param[i] = saved + h;
      const double loss_up =
          bce_loss(model_forward(model, image).probability, label);
      param[i] = saved - h;
      const double loss_down =
          bce_loss(model_forward(model, image).probability, label);
      param[i] = saved;

      const double numeric = (loss_up - loss_down) / (2.0 * h);
      const double analytic = grad[i];
      const double rel = std::fabs(analytic - numeric) /
                         std::max({std::fabs(analytic), std::fabs(numeric),
                                   1e-8});
      if (rel > param_worst) param_worst = rel;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_param = grads[pi].name;
        report.worst_index = i;
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
    report.per_param.emplace_back(grads[pi].name, param_worst);
  }
  return report;
}

}  // namespace scnn
