#pragma once

#include <stdexcept>

namespace d2e {

/// File-system failure while reading or writing an artifact (CLI exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace d2e
