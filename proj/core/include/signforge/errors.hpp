#pragma once

#include <stdexcept>
#include <string>

namespace signforge {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration / manifest input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem problems (missing file, unwritable path, bad image data).
class IoError : public Error {
 public:
  using Error::Error;
};

/// A registered but intentionally unimplemented component was requested.
class NotImplementedError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage failed mid-run.
class StageError : public Error {
 public:
  using Error::Error;
};

}  // namespace signforge
