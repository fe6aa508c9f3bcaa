#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace setsim {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Samples or functions whose dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Too few components or samples to run the requested procedure.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class UnsupportedFormat : public Error {
 public:
  using Error::Error;
};

/// Malformed image content. `offset()` is the byte position where decoding stopped.
class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace setsim
