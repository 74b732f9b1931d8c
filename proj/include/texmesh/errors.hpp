#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace texmesh {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A named external resource (texture, material library) could not be found.
class ResolutionError : public Error {
 public:
  ResolutionError(std::string name, const std::string& what)
      : Error(what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

/// A sort session received a report it cannot accept.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class CodecError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// A request conflicts with current state (stale pair token, duplicate id).
class ConflictError : public Error {
 public:
  using Error::Error;
};

/// The event log is unreadable beyond a recoverable torn tail.
class CorruptLogError : public Error {
 public:
  using Error::Error;
};

}  // namespace texmesh
