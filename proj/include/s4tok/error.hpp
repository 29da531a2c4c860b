#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace s4tok {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on caller-supplied values does not hold.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A computation produced or met a non-finite or otherwise unusable value.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Filesystem failure (missing or unwritable path).
class IoError : public Error {
public:
  using Error::Error;
};

/// Malformed file content; carries the byte offset where parsing stopped.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t offset)
    : Error(what + " (at byte " + std::to_string(offset) + ")")
    , offset_(offset)
  {}

  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

} // namespace s4tok
