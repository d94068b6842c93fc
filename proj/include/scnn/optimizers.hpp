#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "scnn/errors.hpp"
#include "scnn/model.hpp"
#include "scnn/tensor.hpp"

namespace scnn {

enum class OptimizerKind { adam, rmsprop };

inline std::string optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::adam ? "adam" : "rmsprop";
}

struct HyperParams {
  double alpha = 0.001;    // learning rate
  double beta1 = 0.9;      // first-moment decay (adam)
  double beta2 = 0.999;    // second-moment decay (adam)
  double beta = 0.9;       // second-moment decay (rmsprop)
  double epsilon = 1e-8;   // keeps the divisions finite

  void validate() const {
    if (!(alpha > 0.0)) {
      throw config_error("optimizer: learning rate must be positive, got " +
                         std::to_string(alpha));
    }
    if (!(epsilon > 0.0)) {
      throw config_error("optimizer: epsilon must be positive, got " +
                         std::to_string(epsilon));
    }
    for (double b : {beta1, beta2, beta}) {
      if (!(b >= 0.0) || !(b < 1.0)) {
        throw config_error("optimizer: decay rate " + std::to_string(b) +
                           " outside [0, 1)");
      }
    }
  }
};

// Elementwise update kernels. v and s are the running moment buffers; t is
// the 1-based step number used in the bias corrections.
inline void adam_update(double* w, const double* g, double* v, double* s,
                        std::size_t n, const HyperParams& hp, std::uint64_t t) {
  const double b1 = hp.beta1, b2 = hp.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = b1 * v[i] + (1.0 - b1) * g[i];
    s[i] = b2 * s[i] + (1.0 - b2) * g[i] * g[i];
    const double vhat = v[i] / corr1;
    const double shat = s[i] / corr2;
    w[i] -= hp.alpha * vhat / (std::sqrt(shat) + hp.epsilon);
  }
}

inline void rmsprop_update(double* w, const double* g, double* s,
                           std::size_t n, const HyperParams& hp) {
  const double b = hp.beta;
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = b * s[i] + (1.0 - b) * g[i] * g[i];
    w[i] -= hp.alpha * g[i] / (std::sqrt(s[i]) + hp.epsilon);
  }
}

// Moment buffers mirrored over the model's parameter list, plus the step
// counter. t counts completed steps; the first update runs with t = 1.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  HyperParams hyper;
  std::uint64_t t = 0;
  std::vector<NamedTensor> v;  // adam only
  std::vector<NamedTensor> s;

  static OptimizerState for_model(OptimizerKind kind, const Model& model,
                                  HyperParams hyper = {}) {
    hyper.validate();
    OptimizerState st;
    st.kind = kind;
    st.hyper = hyper;
    for (const auto& p : model.params()) {
      if (kind == OptimizerKind::adam) {
        st.v.push_back({p.name, Tensor::zeros(p.value.shape())});
      }
      st.s.push_back({p.name, Tensor::zeros(p.value.shape())});
    }
    return st;
  }
};

namespace detail {

inline void check_step_shapes(const Model& model, const ParamGrads& grads,
                              const OptimizerState& state) {
  const auto& params = model.params();
  if (grads.size() != params.size() || state.s.size() != params.size() ||
      (state.kind == OptimizerKind::adam && state.v.size() != params.size())) {
    throw consistency_error("optimizer: parameter/gradient/state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].name != params[i].name ||
        grads[i].value.shape() != params[i].value.shape() ||
        state.s[i].value.shape() != params[i].value.shape()) {
      throw consistency_error("optimizer: entry " + std::to_string(i) + " (" +
                              params[i].name + ") misaligned across "
                              "parameters, gradients, and state");
    }
  }
}

}  // namespace detail

inline void adam_step(Model& model, const ParamGrads& grads,
                      OptimizerState& state) {
  if (state.kind != OptimizerKind::adam) {
    throw consistency_error("adam_step: state belongs to " +
                            optimizer_name(state.kind));
  }
  detail::check_step_shapes(model, grads, state);
  ++state.t;
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    Tensor& w = model.params()[i].value;
    adam_update(w.data(), grads[i].value.data(), state.v[i].value.data(),
                state.s[i].value.data(), w.size(), state.hyper, state.t);
  }
}

inline void rmsprop_step(Model& model, const ParamGrads& grads,
                         OptimizerState& state) {
  if (state.kind != OptimizerKind::rmsprop) {
    throw consistency_error("rmsprop_step: state belongs to " +
                            optimizer_name(state.kind));
  }
  detail::check_step_shapes(model, grads, state);
  ++state.t;
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    Tensor& w = model.params()[i].value;
    rmsprop_update(w.data(), grads[i].value.data(), state.s[i].value.data(),
                   w.size(), state.hyper);
  }
}

inline void optimizer_step(Model& model, const ParamGrads& grads,
                           OptimizerState& state) {
  state.kind == OptimizerKind::adam ? adam_step(model, grads, state)
                                    : rmsprop_step(model, grads, state);
}

}  // namespace scnn
