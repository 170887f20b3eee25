#pragma once

#include <stdexcept>
#include <string>

namespace vkd {

// Base class for every error this library throws on purpose. The CLI maps
// these to exit code 1; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input files (manifest syntax, image headers, checkpoint magic).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error("format error: " + msg) {}
};

// Well-formed input that violates a dataset/model consistency rule.
class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& msg) : Error("integrity error: " + msg) {}
};

// A manifest parsed fine but contains no usable samples.
class EmptyDatasetError : public Error {
 public:
  explicit EmptyDatasetError(const std::string& msg) : Error("empty dataset: " + msg) {}
};

// Invalid configuration value or combination.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

// Invalid argument to a library call (shape mismatch, out-of-range request).
class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& msg) : Error("argument error: " + msg) {}
};

// Filesystem trouble: missing file, unreadable path, failed write.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("io error: " + msg) {}
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error("numeric error: " + msg) {}
};

// A batch that cannot satisfy the sampler's composition contract.
class BatchCompositionError : public Error {
 public:
  explicit BatchCompositionError(const std::string& msg)
      : Error("batch composition error: " + msg) {}
};

}  // namespace vkd
