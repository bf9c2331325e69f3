#pragma once

#include <stdexcept>
#include <string>

namespace hvcm {

// Raised for contract violations: bad parameters, inconsistent state, malformed input.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hvcm
