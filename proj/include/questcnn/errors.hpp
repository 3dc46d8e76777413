#pragma once

#include <stdexcept>
#include <string>

namespace questcnn {

// Malformed or inconsistent input data (corpus lines, embedding files, configs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values during training or gradient checking.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated an operation's precondition (bad shapes, bad rates, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace questcnn
