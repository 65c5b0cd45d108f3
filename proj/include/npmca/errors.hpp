#pragma once

#include <stdexcept>
#include <string>

namespace npmca {

// Error taxonomy. Everything derives from std::runtime_error so callers that
// only care about "something went wrong" can catch one type.

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace npmca
