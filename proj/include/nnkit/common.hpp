#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nnkit {

/// Bad wiring: incompatible shapes, invalid hyperparameters, malformed specs.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Bad runtime data: out-of-range labels, empty datasets, non-finite values.
class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Corrupt or mismatched file content. Carries the byte offset of the defect.
class FormatError : public std::runtime_error {
public:
  FormatError(const std::string &msg, std::uint64_t offset)
      : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
        byte_offset(offset) {}
  std::uint64_t byte_offset;
};

/// A call made before its protocol allows it (e.g. evolving untrained members).
class PreconditionError : public std::runtime_error {
public:
  explicit PreconditionError(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace nnkit
