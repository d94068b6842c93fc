#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "scnn/errors.hpp"
#include "scnn/model.hpp"
#include "scnn/pgm.hpp"
#include "scnn/tensor.hpp"

// Checkpoint layout: magic "SCNV", u32 little-endian version (1), u32
// little-endian header length, JSON header (architecture, seed, epochs,
// parameter manifest with byte offsets), then the raw little-endian f64
// parameter buffers in manifest order. Weights only; optimizer state is not
// persisted.

namespace scnn {

inline constexpr char kCheckpointMagic[4] = {'S', 'C', 'N', 'V'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline std::uint32_t get_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 |
         static_cast<std::uint32_t>(p[3]) << 24;
}

inline void put_f64_le(std::vector<std::uint8_t>& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
}

inline double get_f64_le(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline nlohmann::json layer_spec_to_json(const LayerSpec& sp) {
  nlohmann::json j;
  switch (sp.kind) {
    case LayerKind::conv2d:
      j["kind"] = "conv2d";
      j["kernel_size"] = sp.kernel_size;
      j["filters"] = sp.filters;
      break;
    case LayerKind::maxpool2:
      j["kind"] = "maxpool2";
      break;
    case LayerKind::flatten:
      j["kind"] = "flatten";
      break;
    case LayerKind::dense:
      j["kind"] = "dense";
      j["units"] = sp.units;
      break;
    case LayerKind::activation:
      j["kind"] = "activation";
      j["act"] = activation_name(sp.act);
      if (sp.act == Activation::leaky_relu) j["slope"] = sp.slope;
      break;
  }
  return j;
}

inline LayerSpec layer_spec_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "conv2d") {
    return LayerSpec::conv2d(j.at("kernel_size").get<std::size_t>(),
                             j.at("filters").get<std::size_t>());
  }
  if (kind == "maxpool2") return LayerSpec::maxpool2();
  if (kind == "flatten") return LayerSpec::flatten();
  if (kind == "dense") return LayerSpec::dense(j.at("units").get<std::size_t>());
  if (kind == "activation") {
    const std::string act = j.at("act").get<std::string>();
    if (act == "relu") return LayerSpec::activation(Activation::relu);
    if (act == "sigmoid") return LayerSpec::activation(Activation::sigmoid);
    if (act == "leaky_relu") {
      return LayerSpec::activation(Activation::leaky_relu,
                                   j.value("slope", 0.01));
    }
    throw decode_error("checkpoint: unknown activation '" + act + "'", 0);
  }
  throw decode_error("checkpoint: unknown layer kind '" + kind + "'", 0);
}

inline void save_checkpoint(const Model& model, std::uint64_t epochs,
                            const std::filesystem::path& path) {
  nlohmann::json header;
  header["architecture"]["input_shape"] = model.input_shape();
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& sp : model.specs()) layers.push_back(layer_spec_to_json(sp));
  header["architecture"]["layers"] = layers;
  header["seed"] = model.seed();
  header["epochs"] = epochs;

  nlohmann::json manifest = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& p : model.params()) {
    manifest.push_back({{"name", p.name},
                        {"shape", p.value.shape()},
                        {"offset", offset}});
    offset += p.value.size() * sizeof(double);
  }
  header["params"] = manifest;
  const std::string header_text = header.dump();

  std::vector<std::uint8_t> bytes;
  bytes.reserve(12 + header_text.size() + offset);
  bytes.insert(bytes.end(), kCheckpointMagic, kCheckpointMagic + 4);
  detail::put_u32_le(bytes, kCheckpointVersion);
  detail::put_u32_le(bytes, static_cast<std::uint32_t>(header_text.size()));
  bytes.insert(bytes.end(), header_text.begin(), header_text.end());
  for (const auto& p : model.params()) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      detail::put_f64_le(bytes, p.value[i]);
    }
  }
  write_file_bytes(path, bytes);
}

struct LoadedCheckpoint {
  Model model;
  std::uint64_t epochs = 0;
};

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  if (bytes.size() < 12) {
    throw decode_error("checkpoint: truncated before header", bytes.size());
  }
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw decode_error("checkpoint: bad magic bytes", 0);
  }
  const std::uint32_t version = detail::get_u32_le(bytes.data() + 4);
  if (version != kCheckpointVersion) {
    throw decode_error("checkpoint: unsupported version " +
                           std::to_string(version) + " (expected " +
                           std::to_string(kCheckpointVersion) + ")",
                       4);
  }
  const std::uint32_t header_len = detail::get_u32_le(bytes.data() + 8);
  if (bytes.size() - 12 < header_len) {
    throw decode_error("checkpoint: truncated header", bytes.size());
  }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12,
                                   bytes.begin() + 12 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw decode_error(std::string("checkpoint: malformed header: ") + e.what(),
                       12);
  }

  LoadedCheckpoint out;
  try {
    const Shape input_shape =
        header.at("architecture").at("input_shape").get<Shape>();
    std::vector<LayerSpec> specs;
    for (const auto& j : header.at("architecture").at("layers")) {
      specs.push_back(layer_spec_from_json(j));
    }
    const std::uint64_t seed = header.at("seed").get<std::uint64_t>();
    out.epochs = header.at("epochs").get<std::uint64_t>();
    out.model = Model::build(std::move(specs), input_shape, seed);

    const nlohmann::json& manifest = header.at("params");
    auto& params = out.model.params();
    if (manifest.size() != params.size()) {
      throw decode_error("checkpoint: params manifest lists " +
                             std::to_string(manifest.size()) +
                             " tensors, architecture defines " +
                             std::to_string(params.size()),
                         12);
    }
    const std::size_t data_start = 12 + header_len;
    std::size_t expect_offset = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const nlohmann::json& entry = manifest[i];
      const std::string name = entry.at("name").get<std::string>();
      const Shape shape = entry.at("shape").get<Shape>();
      const std::size_t offset = entry.at("offset").get<std::size_t>();
      if (name != params[i].name) {
        throw decode_error("checkpoint: params[" + std::to_string(i) +
                               "].name is '" + name + "', architecture has '" +
                               params[i].name + "'",
                           data_start);
      }
      if (shape != params[i].value.shape()) {
        throw decode_error("checkpoint: params[" + std::to_string(i) +
                               "].shape " + shape_string(shape) +
                               " disagrees with architecture " +
                               shape_string(params[i].value.shape()),
                           data_start);
      }
      if (offset != expect_offset) {
        throw decode_error("checkpoint: params[" + std::to_string(i) +
                               "].offset " + std::to_string(offset) +
                               " is not the running offset " +
                               std::to_string(expect_offset),
                           data_start);
      }
      const std::size_t nbytes = params[i].value.size() * sizeof(double);
      if (bytes.size() < data_start + offset + nbytes) {
        throw decode_error("checkpoint: truncated data for params[" +
                               std::to_string(i) + "] (" + name + ")",
                           bytes.size());
      }
      const std::uint8_t* src = bytes.data() + data_start + offset;
      for (std::size_t k = 0; k < params[i].value.size(); ++k) {
        params[i].value[k] = detail::get_f64_le(src + 8 * k);
      }
      expect_offset += nbytes;
    }
    if (bytes.size() != data_start + expect_offset) {
      throw decode_error("checkpoint: " +
                             std::to_string(bytes.size() - data_start -
                                            expect_offset) +
                             " trailing bytes after parameter data",
                         data_start + expect_offset);
    }
  } catch (const nlohmann::json::exception& e) {
    throw decode_error(std::string("checkpoint: header field error: ") +
                           e.what(),
                       12);
  }
  return out;
}

}  // namespace scnn
