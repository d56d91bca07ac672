#pragma once

#include <stdexcept>
#include <string>

namespace sig2sig {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes or convolution geometry.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value, unknown key, or malformed argument.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or an undefined statistic.
class NumericError : public Error {
 public:
  using Error::Error;
};

// On-disk format problems (.sig files, checkpoints, config files).
class FormatError : public Error {
 public:
  enum class Kind { bad_magic, bad_version, truncated, io, malformed };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace sig2sig
