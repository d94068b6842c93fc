#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "scnn/errors.hpp"
#include "scnn/rng.hpp"
#include "scnn/tensor.hpp"

namespace scnn {

// Corner-aligned bilinear resampling of a single-channel image. Matching
// dimensions return the input unchanged (bit-exact identity); a dimension of
// one samples the source center.
inline Tensor resize_bilinear(const Tensor& img, std::size_t out_h,
                              std::size_t out_w) {
  if (img.rank() != 3 || img.dim(2) != 1) {
    throw shape_error("resize: image must be HxWx1, got " +
                      shape_string(img.shape()));
  }
  if (out_h == 0 || out_w == 0) {
    throw config_error("resize: target " + std::to_string(out_h) + "x" +
                       std::to_string(out_w) + " is not positive");
  }
  const std::size_t h = img.dim(0), w = img.dim(1);
  if (out_h == h && out_w == w) return img;

  Tensor out = Tensor::zeros({out_h, out_w, 1});
  const double* src = img.data();
  double* dst = out.data();
  const double sy_step =
      out_h > 1 ? static_cast<double>(h - 1) / static_cast<double>(out_h - 1)
                : 0.0;
  const double sx_step =
      out_w > 1 ? static_cast<double>(w - 1) / static_cast<double>(out_w - 1)
                : 0.0;
  for (std::size_t y = 0; y < out_h; ++y) {
    const double sy = out_h > 1 ? sy_step * static_cast<double>(y)
                                : 0.5 * static_cast<double>(h - 1);
    std::size_t y0 = static_cast<std::size_t>(sy);
    if (y0 >= h - 1) y0 = h - 1;
    const std::size_t y1 = y0 + 1 < h ? y0 + 1 : y0;
    const double wy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double sx = out_w > 1 ? sx_step * static_cast<double>(x)
                                  : 0.5 * static_cast<double>(w - 1);
      std::size_t x0 = static_cast<std::size_t>(sx);
      if (x0 >= w - 1) x0 = w - 1;
      const std::size_t x1 = x0 + 1 < w ? x0 + 1 : x0;
      const double wx = sx - static_cast<double>(x0);
      const double v00 = src[y0 * w + x0];
      const double v01 = src[y0 * w + x1];
      const double v10 = src[y1 * w + x0];
      const double v11 = src[y1 * w + x1];
      double v = v00 * (1.0 - wy) * (1.0 - wx) + v01 * (1.0 - wy) * wx +
                 v10 * wy * (1.0 - wx) + v11 * wy * wx;
      // The weights sum to one in exact arithmetic but each product rounds,
      // so a blend of in-range pixels can overshoot [0, 1] by an ulp.
      if (v < 0.0) v = 0.0;
      if (v > 1.0) v = 1.0;
      dst[y * out_w + x] = v;
    }
  }
  return out;
}

// Scale jitter: factor f drawn uniformly from [1-zoom_range, 1+zoom_range].
// Zoom in (f > 1) center-crops floor(H/f) and resizes back; zoom out (f < 1)
// shrinks to floor(H*f) and pads back by replicating edges symmetrically.
inline Tensor random_zoom(const Tensor& img, double zoom_range, Rng& rng) {
  if (!(zoom_range >= 0.0) || zoom_range >= 1.0) {
    throw config_error("zoom: range " + std::to_string(zoom_range) +
                       " outside [0, 1)");
  }
  if (img.rank() != 3 || img.dim(2) != 1) {
    throw shape_error("zoom: image must be HxWx1, got " +
                      shape_string(img.shape()));
  }
  const std::size_t h = img.dim(0), w = img.dim(1);
  const double f = rng.uniform(1.0 - zoom_range, 1.0 + zoom_range);
  if (f == 1.0) return img;

  if (f > 1.0) {
    std::size_t crop_h = static_cast<std::size_t>(static_cast<double>(h) / f);
    std::size_t crop_w = static_cast<std::size_t>(static_cast<double>(w) / f);
    if (crop_h < 1) crop_h = 1;
    if (crop_w < 1) crop_w = 1;
    if (crop_h == h && crop_w == w) return img;
    const std::size_t top = (h - crop_h) / 2;
    const std::size_t left = (w - crop_w) / 2;
    Tensor crop = Tensor::zeros({crop_h, crop_w, 1});
    for (std::size_t y = 0; y < crop_h; ++y) {
      for (std::size_t x = 0; x < crop_w; ++x) {
        crop[y * crop_w + x] = img[(top + y) * w + (left + x)];
      }
    }
    return resize_bilinear(crop, h, w);
  }

  std::size_t small_h = static_cast<std::size_t>(static_cast<double>(h) * f);
  std::size_t small_w = static_cast<std::size_t>(static_cast<double>(w) * f);
  if (small_h < 1) small_h = 1;
  if (small_w < 1) small_w = 1;
  if (small_h == h && small_w == w) return img;
  const Tensor small = resize_bilinear(img, small_h, small_w);
  const std::size_t top = (h - small_h) / 2;
  const std::size_t left = (w - small_w) / 2;
  Tensor out = Tensor::zeros({h, w, 1});
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t sy = y < top                 ? 0
                           : y >= top + small_h    ? small_h - 1
                                                   : y - top;
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t sx = x < left               ? 0
                             : x >= left + small_w  ? small_w - 1
                                                    : x - left;
      out[y * w + x] = small[sy * small_w + sx];
    }
  }
  return out;
}

}  // namespace scnn
