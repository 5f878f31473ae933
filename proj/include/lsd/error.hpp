#pragma once

#include <stdexcept>
#include <string>

namespace lsd {

// Base class for all errors raised by this library. The category string is
// stable and machine-readable; the CLI maps it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(category + ": " + message), category_(std::move(category)) {}

  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string& message) : Error("invalid-input", message) {}
};

class InvalidConfigError : public Error {
 public:
  explicit InvalidConfigError(const std::string& message) : Error("invalid-config", message) {}
};

// Raised when an exact oracle would have to visit more paths than its guard
// allows. Carries the exact path count as a decimal string.
class CapacityError : public Error {
 public:
  CapacityError(const std::string& message, std::string count)
      : Error("capacity", message), count_(std::move(count)) {}

  const std::string& count() const { return count_; }

 private:
  std::string count_;
};

class StateError : public Error {
 public:
  explicit StateError(const std::string& message) : Error("state", message) {}
};

class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& message) : Error("corrupt-checkpoint", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

}  // namespace lsd
