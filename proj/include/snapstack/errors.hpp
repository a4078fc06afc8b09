#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace snapstack {

// Bad arguments, dimension mismatches and invalid configuration.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite loss or parameters during SGD.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::size_t iteration, const std::string& what)
      : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

// A snapshot selection that cannot be satisfied by the store.
class SelectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem failures and malformed files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace snapstack
