#pragma once

#include <stdexcept>
#include <string>

namespace contro {

/// Problem with input data (unreadable file, malformed record, degenerate
/// dataset). Precondition violations by the caller use std::invalid_argument.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace contro
