#pragma once

#include <cstddef>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "scnn/errors.hpp"
#include "scnn/gemm.hpp"

namespace scnn {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  out += "]";
  return out;
}

inline std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

// Dense row-major f64 array tagged with its shape. Values are plain copies;
// there are no views or strides, so aliasing can never surprise a caller.
class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    validate_shape();
    data_.assign(shape_numel(shape_), fill);
  }

  Tensor(Shape shape, std::vector<double> values)
      : shape_(std::move(shape)), data_(std::move(values)) {
    validate_shape();
    if (data_.size() != shape_numel(shape_)) {
      throw shape_error("tensor: " + std::to_string(data_.size()) +
                        " values do not fill shape " + shape_string(shape_));
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  template <class... Ix>
  double at(Ix... ix) const {
    return data_[offset_of(ix...)];
  }
  template <class... Ix>
  double& at(Ix... ix) {
    return data_[offset_of(ix...)];
  }

  // Same data, new shape; element counts must agree.
  Tensor reshaped(Shape shape) const {
    if (shape_numel(shape) != data_.size()) {
      throw shape_error("reshape: " + shape_string(shape_) + " has " +
                        std::to_string(data_.size()) + " elements, target " +
                        shape_string(shape) + " needs " +
                        std::to_string(shape_numel(shape)));
    }
    Tensor out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    out.validate_shape();
    return out;
  }

 private:
  void validate_shape() const {
    if (shape_.empty()) {
      throw shape_error("tensor: shape needs at least one dimension");
    }
    for (std::size_t d : shape_) {
      if (d == 0) {
        throw shape_error("tensor: zero dimension in shape " +
                          shape_string(shape_));
      }
    }
  }

  template <class... Ix>
  std::size_t offset_of(Ix... ix) const {
    static_assert(sizeof...(Ix) >= 1, "tensor indexing needs indices");
    const std::size_t idx[] = {static_cast<std::size_t>(ix)...};
    constexpr std::size_t nidx = sizeof...(Ix);
    if (nidx != shape_.size()) {
      throw shape_error("tensor: " + std::to_string(nidx) +
                        " indices into rank-" + std::to_string(shape_.size()) +
                        " tensor");
    }
    std::size_t off = 0;
    for (std::size_t a = 0; a < nidx; ++a) {
      if (idx[a] >= shape_[a]) {
        throw shape_error("tensor: index " + std::to_string(idx[a]) +
                          " out of range for axis " + std::to_string(a) +
                          " of shape " + shape_string(shape_));
      }
      off = off * shape_[a] + idx[a];
    }
    return off;
  }

  Shape shape_;
  std::vector<double> data_;
};

inline Tensor tensor_create(Shape shape, double fill) {
  return Tensor(std::move(shape), fill);
}

enum class ElementwiseOp { add, sub, mul };

inline Tensor elementwise(const Tensor& a, const Tensor& b, ElementwiseOp op) {
  if (a.shape() != b.shape()) {
    throw shape_error("elementwise: shape mismatch " + shape_string(a.shape()) +
                      " vs " + shape_string(b.shape()));
  }
  Tensor out = Tensor::zeros(a.shape());
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = out.data();
  const std::size_t n = a.size();
  switch (op) {
    case ElementwiseOp::add:
      for (std::size_t i = 0; i < n; ++i) pc[i] = pa[i] + pb[i];
      break;
    case ElementwiseOp::sub:
      for (std::size_t i = 0; i < n; ++i) pc[i] = pa[i] - pb[i];
      break;
    case ElementwiseOp::mul:
      for (std::size_t i = 0; i < n; ++i) pc[i] = pa[i] * pb[i];
      break;
  }
  return out;
}

inline Tensor operator+(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, ElementwiseOp::add);
}
inline Tensor operator-(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, ElementwiseOp::sub);
}
inline Tensor operator*(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, ElementwiseOp::mul);
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw shape_error("matmul: needs rank-2 operands, got " +
                      shape_string(a.shape()) + " and " +
                      shape_string(b.shape()));
  }
  if (a.dim(1) != b.dim(0)) {
    throw shape_error("matmul: inner dimensions disagree, " +
                      shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  Tensor out = Tensor::zeros({a.dim(0), b.dim(1)});
  gemm_accumulate(a.data(), b.data(), out.data(), a.dim(0), a.dim(1), b.dim(1));
  return out;
}

inline bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  if (a.size() == 0) return true;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace scnn
