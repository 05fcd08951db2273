#pragma once

#include <stdexcept>
#include <string>

namespace qcm {

// Bad input data: malformed documents, out-of-range fields, invalid config.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was called outside its contract (caller bug, not bad data).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace qcm
