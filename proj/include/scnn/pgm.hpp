#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "scnn/errors.hpp"
#include "scnn/tensor.hpp"

// Binary PGM ("P5", maxval 255) is the only image format here: simple enough
// to read and write bit-exactly with no codec dependency.

namespace scnn {

namespace detail {

// Skips whitespace and '#' comments, then parses one decimal field.
// Advances pos; reports the offset where parsing stalled. start_out, when
// given, receives the offset of the field's first digit.
inline std::size_t parse_pgm_int(const std::vector<std::uint8_t>& bytes,
                                 std::size_t& pos, const char* field,
                                 std::size_t* start_out = nullptr) {
  while (pos < bytes.size()) {
    const std::uint8_t c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= bytes.size()) {
    throw decode_error(std::string("pgm: missing ") + field, bytes.size());
  }
  if (bytes[pos] < '0' || bytes[pos] > '9') {
    throw decode_error(std::string("pgm: bad character in ") + field, pos);
  }
  std::size_t value = 0;
  const std::size_t start = pos;
  if (start_out) *start_out = start;
  while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
    value = value * 10 + (bytes[pos] - '0');
    if (value > 1000000000) {
      throw decode_error(std::string("pgm: ") + field + " out of range", start);
    }
    ++pos;
  }
  return value;
}

}  // namespace detail

inline Tensor decode_pgm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw decode_error("pgm: not a binary PGM (expected magic \"P5\")", 0);
  }
  std::size_t pos = 2;
  const std::size_t width = detail::parse_pgm_int(bytes, pos, "width");
  const std::size_t height = detail::parse_pgm_int(bytes, pos, "height");
  std::size_t maxval_at = pos;
  const std::size_t maxval =
      detail::parse_pgm_int(bytes, pos, "maxval", &maxval_at);
  if (width == 0 || height == 0) {
    throw decode_error("pgm: zero image dimension", 2);
  }
  if (maxval != 255) {
    throw decode_error("pgm: maxval " + std::to_string(maxval) +
                           " unsupported (need 255)",
                       maxval_at);
  }
  if (pos >= bytes.size()) {
    throw decode_error("pgm: missing pixel data", bytes.size());
  }
  // Exactly one whitespace byte separates the header from the raster.
  const std::uint8_t sep = bytes[pos];
  if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n') {
    throw decode_error("pgm: expected whitespace before pixel data", pos);
  }
  ++pos;
  const std::size_t need = width * height;
  if (bytes.size() - pos < need) {
    throw decode_error("pgm: truncated pixel data (" +
                           std::to_string(bytes.size() - pos) + " of " +
                           std::to_string(need) + " bytes)",
                       bytes.size());
  }
  Tensor img = Tensor::zeros({height, width, 1});
  double* p = img.data();
  for (std::size_t i = 0; i < need; ++i) {
    p[i] = static_cast<double>(bytes[pos + i]) / 255.0;
  }
  return img;
}

// Accepts HxWx1 or HxW; values clamped to [0,1] and rounded to 8 bits.
inline std::vector<std::uint8_t> encode_pgm(const Tensor& img) {
  if (img.rank() != 2 && !(img.rank() == 3 && img.dim(2) == 1)) {
    throw shape_error("pgm: can only encode HxW or HxWx1 grayscale, got " +
                      shape_string(img.shape()));
  }
  const std::size_t h = img.dim(0), w = img.dim(1);
  std::string header =
      "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + h * w);
  const double* p = img.data();
  for (std::size_t i = 0; i < h * w; ++i) {
    double v = p[i];
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  return out;
}

inline std::vector<std::uint8_t> read_file_bytes(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw io_error("cannot open " + path.string());
  }
  std::vector<std::uint8_t> bytes;
  in.seekg(0, std::ios::end);
  bytes.resize(static_cast<std::size_t>(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!in) {
    throw io_error("failed reading " + path.string());
  }
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw io_error("cannot create " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw io_error("failed writing " + path.string());
  }
}

inline Tensor load_pgm(const std::filesystem::path& path) {
  return decode_pgm(read_file_bytes(path));
}

inline void save_pgm(const std::filesystem::path& path, const Tensor& img) {
  write_file_bytes(path, encode_pgm(img));
}

}  // namespace scnn
