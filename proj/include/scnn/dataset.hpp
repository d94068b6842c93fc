#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "scnn/errors.hpp"
#include "scnn/image_ops.hpp"
#include "scnn/pgm.hpp"
#include "scnn/rng.hpp"
#include "scnn/tensor.hpp"

namespace scnn {

inline constexpr std::size_t kImageSide = 100;

struct Sample {
  Tensor image;  // 100x100x1, pixels in [0,1]
  int label = 0;  // 1 = positive class
  std::string source_id;
};

struct Dataset {
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  std::size_t positives() const {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.label == 1;
    return n;
  }
  std::size_t negatives() const { return samples.size() - positives(); }
};

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
      throw config_error("split: train fraction " +
                         std::to_string(train_fraction) + " outside (0, 1)");
    }
  }
};

// Seeded shuffle, then the first floor(n * fraction + 0.5) samples train and
// the remainder validate. Always a disjoint, exhaustive partition.
inline std::pair<Dataset, Dataset> split(const Dataset& dataset,
                                         const SplitSpec& spec) {
  spec.validate();
  if (dataset.samples.empty()) {
    throw input_error("split: dataset is empty");
  }
  const std::size_t n = dataset.samples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(spec.seed, Stream::split));
  rng.shuffle(order);

  const std::size_t n_train = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * spec.train_fraction + 0.5));
  Dataset train, val;
  train.samples.reserve(n_train);
  val.samples.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_train ? train : val).samples.push_back(dataset.samples[order[i]]);
  }
  return {std::move(train), std::move(val)};
}

namespace detail {

inline std::string padded_index(std::size_t i) {
  std::string s = std::to_string(i);
  return std::string(s.size() < 5 ? 5 - s.size() : 0, '0') + s;
}

// Hard-edged diagonal stripes: orientation, frequency, and phase vary per
// sample, contrast is fixed and high.
inline Tensor stripe_image(Rng& rng) {
  const double deg = rng.uniform(15.0, 75.0);
  const double sign = rng.below(2) ? 1.0 : -1.0;
  const double theta = sign * deg * std::numbers::pi / 180.0;
  const double freq = rng.uniform(0.06, 0.14);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);

  Tensor img = Tensor::zeros({kImageSide, kImageSide, 1});
  double* p = img.data();
  for (std::size_t r = 0; r < kImageSide; ++r) {
    for (std::size_t c = 0; c < kImageSide; ++c) {
      const double along = static_cast<double>(c) * cos_t +
                           static_cast<double>(r) * sin_t;
      const double s =
          std::sin(2.0 * std::numbers::pi * freq * along + phase);
      double v = (s >= 0.0 ? 0.82 : 0.18) + rng.uniform(-0.1, 0.1);
      if (v < 0.0) v = 0.0;
      if (v > 1.0) v = 1.0;
      p[r * kImageSide + c] = v;
    }
  }
  return img;
}

// Two to four soft gaussian blobs over a dark background. Amplitudes and
// widths keep the class mean brightness near the stripe class so raw pixel
// sums carry no easy signal.
inline Tensor blob_image(Rng& rng) {
  const std::size_t blobs = 2 + rng.below(3);
  double cx[4], cy[4], inv2s2[4], amp[4];
  for (std::size_t b = 0; b < blobs; ++b) {
    cx[b] = rng.uniform(25.0, 75.0);
    cy[b] = rng.uniform(25.0, 75.0);
    const double sigma = rng.uniform(10.0, 22.0);
    inv2s2[b] = 1.0 / (2.0 * sigma * sigma);
    amp[b] = rng.uniform(0.5, 0.85);
  }

  Tensor img = Tensor::zeros({kImageSide, kImageSide, 1});
  double* p = img.data();
  for (std::size_t r = 0; r < kImageSide; ++r) {
    for (std::size_t c = 0; c < kImageSide; ++c) {
      double v = 0.15;
      for (std::size_t b = 0; b < blobs; ++b) {
        const double dx = static_cast<double>(c) - cx[b];
        const double dy = static_cast<double>(r) - cy[b];
        v += amp[b] * std::exp(-(dx * dx + dy * dy) * inv2s2[b]);
      }
      v += rng.uniform(-0.1, 0.1);
      if (v < 0.0) v = 0.0;
      if (v > 1.0) v = 1.0;
      p[r * kImageSide + c] = v;
    }
  }
  return img;
}

}  // namespace detail

// Deterministic two-class set: label 1 is the stripe pattern, label 0 the
// blob pattern, interleaved so any prefix stays close to balanced.
inline Dataset generate_synthetic(std::size_t n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) {
    throw config_error("synthetic: need at least one sample per class");
  }
  Rng rng(derive_seed(seed, Stream::synthetic));
  Dataset ds;
  ds.samples.reserve(2 * n_per_class);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    ds.samples.push_back(
        {detail::blob_image(rng), 0, "neg_" + detail::padded_index(i)});
    ds.samples.push_back(
        {detail::stripe_image(rng), 1, "pos_" + detail::padded_index(i)});
  }
  return ds;
}

// CSV lines `relative_path,label`, resolved against the manifest's directory.
// Images are decoded, resized to 100x100, and kept in manifest order.
inline Dataset load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw io_error("cannot open manifest " + path.string());
  }
  const std::filesystem::path base = path.parent_path();
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0) {
      throw input_error("manifest line " + std::to_string(line_no) +
                        ": expected `path,label`");
    }
    const std::string rel = line.substr(0, comma);
    const std::string label_str = line.substr(comma + 1);
    int label;
    if (label_str == "0") {
      label = 0;
    } else if (label_str == "1") {
      label = 1;
    } else {
      throw input_error("manifest line " + std::to_string(line_no) +
                        ": label '" + label_str + "' must be 0 or 1");
    }
    const std::filesystem::path img_path = base / rel;
    Tensor img;
    try {
      img = load_pgm(img_path);
    } catch (const error& e) {
      throw input_error("manifest line " + std::to_string(line_no) + " (" +
                        rel + "): " + e.what());
    }
    ds.samples.push_back(
        {resize_bilinear(img, kImageSide, kImageSide), label, rel});
  }
  if (ds.samples.empty()) {
    throw input_error("manifest " + path.string() + " lists no samples");
  }
  return ds;
}

// Writes one PGM per sample plus manifest.csv referencing them, so synthetic
// data rides the same loader as external data.
inline std::filesystem::path write_dataset(const Dataset& dataset,
                                           const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw io_error("cannot create " + dir.string() + ": " + ec.message());
  }
  std::string manifest;
  for (const auto& s : dataset.samples) {
    const std::string file = s.source_id + ".pgm";
    save_pgm(dir / file, s.image);
    manifest += file + "," + std::to_string(s.label) + "\n";
  }
  const std::filesystem::path mpath = dir / "manifest.csv";
  std::ofstream out(mpath, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw io_error("cannot create " + mpath.string());
  }
  out << manifest;
  if (!out) {
    throw io_error("failed writing " + mpath.string());
  }
  return mpath;
}

}  // namespace scnn
