#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "scnn/activations.hpp"
#include "scnn/errors.hpp"
#include "scnn/layers.hpp"
#include "scnn/rng.hpp"
#include "scnn/tensor.hpp"

namespace scnn {

enum class LayerKind { conv2d, maxpool2, flatten, dense, activation };
enum class Activation { relu, leaky_relu, sigmoid };

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

struct LayerSpec {
  LayerKind kind = LayerKind::flatten;
  std::size_t kernel_size = 0;  // conv2d
  std::size_t filters = 0;      // conv2d
  std::size_t units = 0;        // dense
  Activation act = Activation::relu;  // activation
  double slope = 0.01;                // leaky_relu only

  static LayerSpec conv2d(std::size_t kernel_size, std::size_t filters) {
    if (kernel_size < 1 || filters < 1) {
      throw config_error("conv2d spec: kernel size and filter count must be >= 1");
    }
    LayerSpec s;
    s.kind = LayerKind::conv2d;
    s.kernel_size = kernel_size;
    s.filters = filters;
    return s;
  }
  static LayerSpec maxpool2() {
    LayerSpec s;
    s.kind = LayerKind::maxpool2;
    return s;
  }
  static LayerSpec flatten() {
    LayerSpec s;
    s.kind = LayerKind::flatten;
    return s;
  }
  static LayerSpec dense(std::size_t units) {
    if (units < 1) throw config_error("dense spec: unit count must be >= 1");
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.units = units;
    return s;
  }
  static LayerSpec activation(Activation act, double slope = 0.01) {
    if (act == Activation::leaky_relu) check_leaky_slope(slope);
    LayerSpec s;
    s.kind = LayerKind::activation;
    s.act = act;
    s.slope = slope;
    return s;
  }
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Gradients mirror the parameter list order, names, and shapes.
using ParamGrads = std::vector<NamedTensor>;

// Architecture plus its parameter set. Built once from (specs, input shape,
// seed); afterwards the parameter values are the only mutable part.
class Model {
 public:
  static Model build(std::vector<LayerSpec> specs, Shape input_shape,
                     std::uint64_t seed) {
    if (input_shape.size() != 3) {
      throw config_error("model: input shape must be HxWxC, got " +
                         shape_string(input_shape));
    }
    if (specs.size() < 2 || specs[specs.size() - 2].kind != LayerKind::dense ||
        specs[specs.size() - 2].units != 1 ||
        specs.back().kind != LayerKind::activation ||
        specs.back().act != Activation::sigmoid) {
      throw config_error(
          "model: architecture must end with dense(1) then sigmoid");
    }

    Model m;
    m.specs_ = std::move(specs);
    m.input_shape_ = std::move(input_shape);
    m.seed_ = seed;
    m.param_index_.assign(m.specs_.size(), -1);

    Rng init_rng(derive_seed(seed, Stream::param_init));
    Shape cur = m.input_shape_;
    std::size_t conv_n = 0, dense_n = 0;
    for (std::size_t li = 0; li < m.specs_.size(); ++li) {
      const LayerSpec& sp = m.specs_[li];
      switch (sp.kind) {
        case LayerKind::conv2d: {
          if (cur.size() != 3) {
            throw config_error("model: conv2d at layer " + std::to_string(li) +
                               " needs HxWxC input, has " + shape_string(cur));
          }
          const std::size_t k = sp.kernel_size, c = cur[2], f = sp.filters;
          if (k > cur[0] || k > cur[1]) {
            throw config_error("model: conv2d kernel " + std::to_string(k) +
                               " larger than input " + shape_string(cur));
          }
          const std::string stem = "conv" + std::to_string(++conv_n);
          m.param_index_[li] = static_cast<int>(m.params_.size());
          m.params_.push_back(
              {stem + ".kernels",
               glorot_uniform(init_rng, {k, k, c, f}, k * k * c, k * k * f)});
          m.params_.push_back({stem + ".biases", Tensor::zeros({f})});
          cur = {cur[0] - k + 1, cur[1] - k + 1, f};
          break;
        }
        case LayerKind::maxpool2: {
          if (cur.size() != 3 || cur[0] < 2 || cur[1] < 2) {
            throw config_error("model: maxpool2 at layer " + std::to_string(li) +
                               " needs an HxWxC input of at least 2x2, has " +
                               shape_string(cur));
          }
          cur = {cur[0] / 2, cur[1] / 2, cur[2]};
          break;
        }
        case LayerKind::flatten: {
          cur = {shape_numel(cur)};
          break;
        }
        case LayerKind::dense: {
          if (cur.size() != 1) {
            throw config_error("model: dense at layer " + std::to_string(li) +
                               " needs a flat input, has " + shape_string(cur));
          }
          const std::size_t n = cur[0], u = sp.units;
          const std::string stem = "dense" + std::to_string(++dense_n);
          m.param_index_[li] = static_cast<int>(m.params_.size());
          m.params_.push_back(
              {stem + ".weights", glorot_uniform(init_rng, {n, u}, n, u)});
          m.params_.push_back({stem + ".biases", Tensor::zeros({u})});
          cur = {u};
          break;
        }
        case LayerKind::activation:
          break;
      }
      m.layer_shapes_.push_back(cur);
    }
    if (cur != Shape{1}) {
      throw config_error("model: output shape is " + shape_string(cur) +
                         ", expected a scalar");
    }
    return m;
  }

  const std::vector<LayerSpec>& specs() const { return specs_; }
  const Shape& input_shape() const { return input_shape_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Shape>& layer_shapes() const { return layer_shapes_; }

  std::vector<NamedTensor>& params() { return params_; }
  const std::vector<NamedTensor>& params() const { return params_; }

  // First parameter slot for a layer, -1 when the layer has none.
  int param_index(std::size_t layer) const { return param_index_[layer]; }

  Tensor* find_param(const std::string& name) {
    for (auto& p : params_) {
      if (p.name == name) return &p.value;
    }
    return nullptr;
  }

  std::size_t scalar_param_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

 private:
  static Tensor glorot_uniform(Rng& rng, Shape shape, std::size_t fan_in,
                               std::size_t fan_out) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t = Tensor::zeros(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = rng.uniform(-limit, limit);
    }
    return t;
  }

  std::vector<LayerSpec> specs_;
  Shape input_shape_;
  std::uint64_t seed_ = 0;
  std::vector<NamedTensor> params_;
  std::vector<int> param_index_;
  std::vector<Shape> layer_shapes_;
};

inline ParamGrads zero_grads_like(const Model& model) {
  ParamGrads g;
  g.reserve(model.params().size());
  for (const auto& p : model.params()) {
    g.push_back({p.name, Tensor::zeros(p.value.shape())});
  }
  return g;
}

// Per-layer state captured on the way forward; exactly what backward needs
// and nothing else. Conv layers keep their patch matrix instead of the input.
struct LayerTrace {
  Tensor input;                     // activations and dense
  Tensor output;                    // sigmoid only
  Tensor patches;                   // conv2d
  ConvDims dims;                    // conv2d
  std::vector<std::size_t> argmax;  // maxpool2
  Shape in_shape;                   // maxpool2 and flatten
};

struct ForwardPass {
  std::vector<LayerTrace> traces;
  double probability = 0.0;
};

inline ForwardPass model_forward(const Model& model, const Tensor& image) {
  if (image.shape() != model.input_shape()) {
    throw shape_error("model_forward: image shape " +
                      shape_string(image.shape()) + " does not match input " +
                      shape_string(model.input_shape()));
  }
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = image[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw input_error("model_forward: pixel " + std::to_string(i) +
                        " value " + std::to_string(v) + " outside [0, 1]");
    }
  }

  ForwardPass fp;
  fp.traces.resize(model.specs().size());
  Tensor cur = image;
  for (std::size_t li = 0; li < model.specs().size(); ++li) {
    const LayerSpec& sp = model.specs()[li];
    LayerTrace& tr = fp.traces[li];
    switch (sp.kind) {
      case LayerKind::conv2d: {
        const Tensor& kernels = model.params()[model.param_index(li)].value;
        const Tensor& bias = model.params()[model.param_index(li) + 1].value;
        tr.dims = conv_dims(cur.shape(), kernels.shape());
        tr.patches = im2col(cur, tr.dims);
        cur = conv2d_forward_from_patches(tr.patches, kernels, bias, tr.dims);
        break;
      }
      case LayerKind::maxpool2: {
        tr.in_shape = cur.shape();
        cur = maxpool2_forward(cur, &tr.argmax);
        break;
      }
      case LayerKind::flatten: {
        tr.in_shape = cur.shape();
        cur = cur.reshaped({cur.size()});
        break;
      }
      case LayerKind::dense: {
        const Tensor& weights = model.params()[model.param_index(li)].value;
        const Tensor& bias = model.params()[model.param_index(li) + 1].value;
        tr.input = cur;
        cur = dense_forward(cur, weights, bias);
        break;
      }
      case LayerKind::activation: {
        switch (sp.act) {
          case Activation::relu:
            tr.input = cur;
            cur = relu(cur);
            break;
          case Activation::leaky_relu:
            tr.input = cur;
            cur = leaky_relu(cur, sp.slope);
            break;
          case Activation::sigmoid:
            cur = sigmoid(cur);
            tr.output = cur;
            break;
        }
        break;
      }
    }
  }
  fp.probability = cur[0];
  return fp;
}

// Chain rule over the recorded traces; accumulates into grads so a batch can
// share one gradient set. dloss_dprob is dL/d(sigmoid output).
inline void model_backward_accumulate(const Model& model,
                                      const ForwardPass& cache,
                                      double dloss_dprob, ParamGrads& grads) {
  const auto& specs = model.specs();
  if (cache.traces.size() != specs.size()) {
    throw consistency_error("model_backward: cache has " +
                            std::to_string(cache.traces.size()) +
                            " layer traces, model has " +
                            std::to_string(specs.size()));
  }
  if (grads.size() != model.params().size()) {
    throw consistency_error("model_backward: gradient set has " +
                            std::to_string(grads.size()) + " entries, model " +
                            std::to_string(model.params().size()));
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].name != model.params()[i].name ||
        grads[i].value.shape() != model.params()[i].value.shape()) {
      throw consistency_error("model_backward: gradient entry " +
                              std::to_string(i) + " (" + grads[i].name +
                              ") does not mirror parameter " +
                              model.params()[i].name);
    }
  }

  Tensor dcur({1}, dloss_dprob);
  for (std::size_t n = specs.size(); n-- > 0;) {
    const LayerSpec& sp = specs[n];
    const LayerTrace& tr = cache.traces[n];
    switch (sp.kind) {
      case LayerKind::conv2d: {
        const int pi = model.param_index(n);
        const Tensor& kernels = model.params()[pi].value;
        Tensor dinput;
        conv2d_backward_accum(dcur, tr.patches, kernels, tr.dims,
                              grads[pi].value, grads[pi + 1].value,
                              n > 0 ? &dinput : nullptr);
        if (n > 0) dcur = std::move(dinput);
        break;
      }
      case LayerKind::maxpool2: {
        dcur = maxpool2_backward(dcur, tr.argmax, tr.in_shape);
        break;
      }
      case LayerKind::flatten: {
        dcur = dcur.reshaped(tr.in_shape);
        break;
      }
      case LayerKind::dense: {
        const int pi = model.param_index(n);
        const Tensor& weights = model.params()[pi].value;
        Tensor dinput;
        dense_backward_accum(dcur, tr.input, weights, grads[pi].value,
                             grads[pi + 1].value, n > 0 ? &dinput : nullptr);
        if (n > 0) dcur = std::move(dinput);
        break;
      }
      case LayerKind::activation: {
        switch (sp.act) {
          case Activation::relu:
            dcur = relu_backward(tr.input, dcur);
            break;
          case Activation::leaky_relu:
            dcur = leaky_relu_backward(tr.input, dcur, sp.slope);
            break;
          case Activation::sigmoid:
            dcur = sigmoid_backward(tr.output, dcur);
            break;
        }
        break;
      }
    }
  }
}

inline ParamGrads model_backward(const Model& model, const ForwardPass& cache,
                                 double dloss_dprob) {
  ParamGrads grads = zero_grads_like(model);
  model_backward_accumulate(model, cache, dloss_dprob, grads);
  return grads;
}

// The full-size stack; the first activation is the knob the four-model
// comparison turns.
inline std::vector<LayerSpec> default_architecture(Activation first_act,
                                                   double slope = 0.01) {
  return {
      LayerSpec::conv2d(3, 16),
      LayerSpec::activation(first_act, slope),
      LayerSpec::maxpool2(),
      LayerSpec::conv2d(3, 32),
      LayerSpec::activation(Activation::relu),
      LayerSpec::maxpool2(),
      LayerSpec::flatten(),
      LayerSpec::dense(64),
      LayerSpec::activation(Activation::relu),
      LayerSpec::dense(1),
      LayerSpec::activation(Activation::sigmoid),
  };
}

inline Shape default_input_shape() { return {100, 100, 1}; }

// Same layer mix at 8x8 scale; cheap enough for finite-difference sweeps.
inline std::vector<LayerSpec> small_architecture(Activation first_act,
                                                 double slope = 0.01) {
  return {
      LayerSpec::conv2d(3, 2),
      LayerSpec::activation(first_act, slope),
      LayerSpec::maxpool2(),
      LayerSpec::conv2d(3, 3),
      LayerSpec::activation(Activation::relu),
      LayerSpec::flatten(),
      LayerSpec::dense(4),
      LayerSpec::activation(Activation::relu),
      LayerSpec::dense(1),
      LayerSpec::activation(Activation::sigmoid),
  };
}

inline Shape small_input_shape() { return {8, 8, 1}; }

}  // namespace scnn
