#pragma once

#include <stdexcept>
#include <string>

namespace gatedclip {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class FormatErrc {
  io,
  bad_magic,
  unsupported_version,
  truncated,
  norm_violation,
  invalid_label,
  duplicate_id,
  corrupt,
  config_mismatch,
};

const char* to_string(FormatErrc code);

// Raised by every on-disk reader/writer (embedding files, checkpoints).
class FormatError : public std::runtime_error {
 public:
  FormatError(FormatErrc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  FormatErrc code() const noexcept { return code_; }

 private:
  FormatErrc code_;
};

// Loss or update became NaN/inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gatedclip
