#pragma once

#include <stdexcept>
#include <string>

namespace grapeqa {

/// Malformed or inconsistent input data (files, datasets, checkpoints).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical failure during a forward or backward pass.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace grapeqa
