#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scnn {

// Base for everything thrown by this library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor/layer dimension violations (mismatched or degenerate shapes).
class shape_error : public error {
 public:
  using error::error;
};

// Out-of-range knobs: slopes, thresholds, fractions, hyperparameters.
class config_error : public error {
 public:
  using error::error;
};

// Structural disagreement between two objects that must mirror each other
// (params vs grads, model vs cache, predictions vs labels).
class consistency_error : public error {
 public:
  using error::error;
};

// Malformed image bytes; carries the offset where decoding stopped.
class decode_error : public error {
 public:
  decode_error(const std::string& what, std::size_t byte_offset)
      : error(what + " (at byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

// Filesystem failures: missing files, unwritable paths.
class io_error : public error {
 public:
  using error::error;
};

// Semantically invalid caller input (empty datasets, bad manifest rows).
class input_error : public error {
 public:
  using error::error;
};

}  // namespace scnn
