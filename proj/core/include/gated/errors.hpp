#pragma once

#include <stdexcept>
#include <string>

namespace gated {

// Process exit codes used by the CLI: 0 success, 2 usage/config,
// 3 runtime-numeric, 4 I/O.
enum class ErrorCategory { config = 2, numeric = 3, io = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string message)
      : std::runtime_error(std::move(message)), category_(category) {}

  ErrorCategory category() const { return category_; }
  int exit_code() const { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

struct ConfigError : Error {
  explicit ConfigError(std::string msg) : Error(ErrorCategory::config, std::move(msg)) {}
};

struct ShapeError : Error {
  explicit ShapeError(std::string msg) : Error(ErrorCategory::numeric, std::move(msg)) {}
};

struct DecodeError : Error {
  explicit DecodeError(std::string msg) : Error(ErrorCategory::io, std::move(msg)) {}
};

struct UnsupportedFormat : Error {
  explicit UnsupportedFormat(std::string msg) : Error(ErrorCategory::io, std::move(msg)) {}
};

struct GrayscaleInput : Error {
  explicit GrayscaleInput(std::string msg) : Error(ErrorCategory::io, std::move(msg)) {}
};

struct IoError : Error {
  explicit IoError(std::string msg) : Error(ErrorCategory::io, std::move(msg)) {}
};

struct LayoutError : Error {
  explicit LayoutError(std::string msg) : Error(ErrorCategory::config, std::move(msg)) {}
};

struct PairingError : Error {
  explicit PairingError(std::string msg) : Error(ErrorCategory::config, std::move(msg)) {}
};

struct MissingReference : Error {
  explicit MissingReference(std::string msg) : Error(ErrorCategory::config, std::move(msg)) {}
};

struct ScorerFailure : Error {
  explicit ScorerFailure(std::string msg) : Error(ErrorCategory::numeric, std::move(msg)) {}
};

struct ChecksumMismatch : Error {
  explicit ChecksumMismatch(std::string msg) : Error(ErrorCategory::io, std::move(msg)) {}
};

struct VersionMismatch : Error {
  explicit VersionMismatch(std::string msg) : Error(ErrorCategory::io, std::move(msg)) {}
};

struct NanLoss : Error {
  explicit NanLoss(std::string msg) : Error(ErrorCategory::numeric, std::move(msg)) {}
};

}  // namespace gated
