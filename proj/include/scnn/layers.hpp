#pragma once

#include <cstddef>
#include <cstring>
#include <string>
#include <vector>

#include "scnn/errors.hpp"
#include "scnn/gemm.hpp"
#include "scnn/tensor.hpp"

// Layer math on HxWxC tensors. Convolution is valid cross-correlation with
// stride 1, lowered to patches x kernel-matrix products; pooling is 2x2
// stride 2. Backward variants accumulate into caller-owned gradient tensors
// so batch accumulation needs no temporaries.

namespace scnn {

struct ConvDims {
  std::size_t in_h = 0, in_w = 0, channels = 0;
  std::size_t kernel = 0, filters = 0;
  std::size_t out_h = 0, out_w = 0;

  std::size_t patch_len() const { return kernel * kernel * channels; }
  std::size_t patch_count() const { return out_h * out_w; }
};

inline ConvDims conv_dims(const Shape& input, const Shape& kernels) {
  if (input.size() != 3) {
    throw shape_error("conv2d: input must be HxWxC, got " +
                      shape_string(input));
  }
  if (kernels.size() != 4 || kernels[0] != kernels[1]) {
    throw shape_error("conv2d: kernels must be kxkxCxF, got " +
                      shape_string(kernels));
  }
  ConvDims d;
  d.in_h = input[0];
  d.in_w = input[1];
  d.channels = input[2];
  d.kernel = kernels[0];
  d.filters = kernels[3];
  if (kernels[2] != d.channels) {
    throw shape_error("conv2d: kernel channels " + std::to_string(kernels[2]) +
                      " do not match input channels " +
                      std::to_string(d.channels));
  }
  if (d.kernel > d.in_h || d.kernel > d.in_w) {
    throw shape_error("conv2d: kernel " + std::to_string(d.kernel) +
                      " larger than input " + shape_string(input));
  }
  d.out_h = d.in_h - d.kernel + 1;
  d.out_w = d.in_w - d.kernel + 1;
  return d;
}

// Rows are output positions in row-major (i,j) order; columns run over
// (a,b,c) with the channel fastest, matching the kernel buffer layout so the
// product reduces in ascending memory order.
inline Tensor im2col(const Tensor& input, const ConvDims& d) {
  Tensor patches = Tensor::zeros({d.patch_count(), d.patch_len()});
  const std::size_t row_span = d.kernel * d.channels;
  const double* src = input.data();
  double* dst = patches.data();
  for (std::size_t i = 0; i < d.out_h; ++i) {
    for (std::size_t j = 0; j < d.out_w; ++j) {
      double* prow = dst + (i * d.out_w + j) * d.patch_len();
      for (std::size_t a = 0; a < d.kernel; ++a) {
        const double* seg = src + ((i + a) * d.in_w + j) * d.channels;
        std::memcpy(prow + a * row_span, seg, row_span * sizeof(double));
      }
    }
  }
  return patches;
}

inline Tensor conv2d_forward_from_patches(const Tensor& patches,
                                          const Tensor& kernels,
                                          const Tensor& bias,
                                          const ConvDims& d) {
  if (bias.shape() != Shape{d.filters}) {
    throw shape_error("conv2d: bias shape " + shape_string(bias.shape()) +
                      " does not match filter count " +
                      std::to_string(d.filters));
  }
  Tensor out = Tensor::zeros({d.out_h, d.out_w, d.filters});
  double* po = out.data();
  const double* pb = bias.data();
  for (std::size_t p = 0; p < d.patch_count(); ++p) {
    double* orow = po + p * d.filters;
    for (std::size_t f = 0; f < d.filters; ++f) orow[f] = pb[f];
  }
  gemm_accumulate(patches.data(), kernels.data(), po, d.patch_count(),
                  d.patch_len(), d.filters);
  return out;
}

inline Tensor conv2d_forward(const Tensor& input, const Tensor& kernels,
                             const Tensor& bias) {
  const ConvDims d = conv_dims(input.shape(), kernels.shape());
  return conv2d_forward_from_patches(im2col(input, d), kernels, bias, d);
}

// Accumulates dKernels/dBias; writes dInput when a buffer is given (the
// first layer of a model passes null). dout is out_h x out_w x F.
inline void conv2d_backward_accum(const Tensor& dout, const Tensor& patches,
                                  const Tensor& kernels, const ConvDims& d,
                                  Tensor& dkernels, Tensor& dbias,
                                  Tensor* dinput) {
  if (dout.shape() != Shape{d.out_h, d.out_w, d.filters}) {
    throw shape_error("conv2d_backward: dout shape " +
                      shape_string(dout.shape()) + " does not match output");
  }
  const std::size_t P = d.patch_count();
  const std::size_t R = d.patch_len();
  const std::size_t F = d.filters;

  // F x P layout makes both the kernel-gradient product and the bias sums
  // contiguous.
  std::vector<double> dout_t(F * P);
  transpose(dout.data(), dout_t.data(), P, F);

  double* pdb = dbias.data();
  for (std::size_t f = 0; f < F; ++f) {
    const double* row = dout_t.data() + f * P;
    double acc = 0.0;
    for (std::size_t p = 0; p < P; ++p) acc += row[p];
    pdb[f] += acc;
  }

  // dK as F x R, then scatter back to the R x F kernel layout.
  std::vector<double> dk_t(F * R, 0.0);
  gemm_accumulate(dout_t.data(), patches.data(), dk_t.data(), F, P, R);
  double* pdk = dkernels.data();
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t f = 0; f < F; ++f) pdk[r * F + f] += dk_t[f * R + r];
  }

  if (dinput == nullptr) return;

  std::vector<double> kern_t(F * R);
  transpose(kernels.data(), kern_t.data(), R, F);
  std::vector<double> dpatches(P * R, 0.0);
  gemm_accumulate(dout.data(), kern_t.data(), dpatches.data(), P, F, R);

  // col2im: every patch element adds back into its source pixel, in fixed
  // (i,j,a) order.
  *dinput = Tensor::zeros({d.in_h, d.in_w, d.channels});
  double* pdi = dinput->data();
  const std::size_t row_span = d.kernel * d.channels;
  for (std::size_t i = 0; i < d.out_h; ++i) {
    for (std::size_t j = 0; j < d.out_w; ++j) {
      const double* prow = dpatches.data() + (i * d.out_w + j) * R;
      for (std::size_t a = 0; a < d.kernel; ++a) {
        double* seg = pdi + ((i + a) * d.in_w + j) * d.channels;
        const double* src = prow + a * row_span;
        for (std::size_t u = 0; u < row_span; ++u) seg[u] += src[u];
      }
    }
  }
}

// 2x2 stride-2 max pooling; odd trailing row/column dropped. argmax (when
// requested) records each winner's flat index into the input; ties go to the
// first element in window scan order.
inline Tensor maxpool2_forward(const Tensor& input,
                               std::vector<std::size_t>* argmax) {
  if (input.rank() != 3) {
    throw shape_error("maxpool2: input must be HxWxF, got " +
                      shape_string(input.shape()));
  }
  const std::size_t H = input.dim(0), W = input.dim(1), F = input.dim(2);
  if (H < 2 || W < 2) {
    throw shape_error("maxpool2: input " + shape_string(input.shape()) +
                      " smaller than 2x2");
  }
  const std::size_t oh = H / 2, ow = W / 2;
  Tensor out = Tensor::zeros({oh, ow, F});
  if (argmax) argmax->assign(oh * ow * F, 0);
  const double* pi = input.data();
  double* po = out.data();
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      const std::size_t base00 = ((2 * i) * W + 2 * j) * F;
      const std::size_t base10 = ((2 * i + 1) * W + 2 * j) * F;
      for (std::size_t f = 0; f < F; ++f) {
        const std::size_t cand[4] = {base00 + f, base00 + F + f, base10 + f,
                                     base10 + F + f};
        std::size_t best = cand[0];
        double bv = pi[best];
        for (int w = 1; w < 4; ++w) {
          if (pi[cand[w]] > bv) {
            best = cand[w];
            bv = pi[best];
          }
        }
        const std::size_t o = (i * ow + j) * F + f;
        po[o] = bv;
        if (argmax) (*argmax)[o] = best;
      }
    }
  }
  return out;
}

inline Tensor maxpool2_backward(const Tensor& dout,
                                const std::vector<std::size_t>& argmax,
                                const Shape& input_shape) {
  if (dout.size() != argmax.size()) {
    throw consistency_error("maxpool2_backward: cache holds " +
                            std::to_string(argmax.size()) +
                            " winners for dout of " +
                            std::to_string(dout.size()));
  }
  Tensor dinput = Tensor::zeros(input_shape);
  double* pd = dinput.data();
  const double* po = dout.data();
  for (std::size_t o = 0; o < argmax.size(); ++o) pd[argmax[o]] += po[o];
  return dinput;
}

inline void check_dense_shapes(const Tensor& input, const Tensor& weights,
                               const Tensor& bias) {
  if (input.rank() != 1 || weights.rank() != 2 || bias.rank() != 1 ||
      weights.dim(0) != input.dim(0) || weights.dim(1) != bias.dim(0)) {
    throw shape_error("dense: incompatible shapes input " +
                      shape_string(input.shape()) + ", weights " +
                      shape_string(weights.shape()) + ", bias " +
                      shape_string(bias.shape()));
  }
}

// out = input . weights + bias, weights laid out input-dim x units.
inline Tensor dense_forward(const Tensor& input, const Tensor& weights,
                            const Tensor& bias) {
  check_dense_shapes(input, weights, bias);
  Tensor out = bias;
  gemm_accumulate(input.data(), weights.data(), out.data(), 1, input.dim(0),
                  bias.dim(0));
  return out;
}

inline void dense_backward_accum(const Tensor& dout, const Tensor& input,
                                 const Tensor& weights, Tensor& dweights,
                                 Tensor& dbias, Tensor* dinput) {
  const std::size_t n = input.dim(0), m = dout.dim(0);
  if (dout.rank() != 1 || m != weights.dim(1)) {
    throw shape_error("dense_backward: dout shape " +
                      shape_string(dout.shape()) + " does not match units " +
                      std::to_string(weights.dim(1)));
  }
  outer_accumulate(input.data(), dout.data(), dweights.data(), n, m);
  double* pdb = dbias.data();
  const double* pdo = dout.data();
  for (std::size_t j = 0; j < m; ++j) pdb[j] += pdo[j];
  if (dinput) {
    *dinput = Tensor::zeros({n});
    matvec_rows_accumulate(weights.data(), pdo, dinput->data(), n, m);
  }
}

}  // namespace scnn
