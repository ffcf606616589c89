#pragma once

#include <stdexcept>
#include <string>

namespace prescale {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Two values with different dimension counts were combined.
class SpaceMismatchError : public Error {
public:
  SpaceMismatchError(std::size_t lhs, std::size_t rhs)
      : Error("resource space mismatch: " + std::to_string(lhs) +
              " dimensions vs " + std::to_string(rhs)) {}
};

// A job demand does not fit the boundary of any bucket in the catalog.
class UnpackableJobError : public Error {
public:
  explicit UnpackableJobError(const std::string& job)
      : Error("job fits no bucket: " + job) {}
};

// Malformed input file. Messages carry the source name and line number.
class ParseError : public Error {
public:
  ParseError(const std::string& source, std::size_t line, const std::string& reason)
      : Error(source + ":" + std::to_string(line) + ": " + reason) {}
};

// Bad or unknown configuration value.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// Inconsistent tensor or series shapes.
class ShapeError : public Error {
public:
  explicit ShapeError(const std::string& what) : Error(what) {}
};

// A virtual instance cannot be placed in any placement group.
class CapacityError : public Error {
public:
  explicit CapacityError(const std::string& what) : Error(what) {}
};

}  // namespace prescale
