#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "scnn/errors.hpp"
#include "scnn/tensor.hpp"

namespace scnn {

inline Tensor relu(const Tensor& x) {
  Tensor y = x;
  double* p = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (p[i] <= 0.0) p[i] = 0.0;
  }
  return y;
}

// dL/dx given dL/dy; units at x <= 0 pass nothing.
inline Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  if (x.shape() != dy.shape()) {
    throw shape_error("relu_backward: shape mismatch " +
                      shape_string(x.shape()) + " vs " +
                      shape_string(dy.shape()));
  }
  Tensor dx = dy;
  const double* px = x.data();
  double* pd = dx.data();
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (px[i] <= 0.0) pd[i] = 0.0;
  }
  return dx;
}

inline void check_leaky_slope(double slope) {
  if (!(slope > 0.0) || !(slope < 1.0)) {
    throw config_error("leaky_relu: slope " + std::to_string(slope) +
                       " outside (0, 1)");
  }
}

inline Tensor leaky_relu(const Tensor& x, double slope) {
  check_leaky_slope(slope);
  Tensor y = x;
  double* p = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (p[i] <= 0.0) p[i] *= slope;
  }
  return y;
}

inline Tensor leaky_relu_backward(const Tensor& x, const Tensor& dy,
                                  double slope) {
  check_leaky_slope(slope);
  if (x.shape() != dy.shape()) {
    throw shape_error("leaky_relu_backward: shape mismatch " +
                      shape_string(x.shape()) + " vs " +
                      shape_string(dy.shape()));
  }
  Tensor dx = dy;
  const double* px = x.data();
  double* pd = dx.data();
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (px[i] <= 0.0) pd[i] *= slope;
  }
  return dx;
}

// Stable form: exp() only ever sees a non-positive argument, so large |x|
// saturates instead of overflowing. Saturation at the top end is nudged to
// the largest double below 1 to keep the output strictly inside (0, 1); the
// bottom end underflows gradually and never reaches 0.
inline double sigmoid_scalar(double x) {
  if (x >= 0.0) {
    const double y = 1.0 / (1.0 + std::exp(-x));
    return y < 1.0 ? y : std::nextafter(1.0, 0.0);
  }
  const double t = std::exp(x);
  return t / (1.0 + t);
}

inline Tensor sigmoid(const Tensor& x) {
  Tensor y = x;
  double* p = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) p[i] = sigmoid_scalar(p[i]);
  return y;
}

// Derivative from the forward output: s * (1 - s).
inline Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  if (y.shape() != dy.shape()) {
    throw shape_error("sigmoid_backward: shape mismatch " +
                      shape_string(y.shape()) + " vs " +
                      shape_string(dy.shape()));
  }
  Tensor dx = dy;
  const double* py = y.data();
  double* pd = dx.data();
  for (std::size_t i = 0; i < dx.size(); ++i) pd[i] *= py[i] * (1.0 - py[i]);
  return dx;
}

}  // namespace scnn
