#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace leakq {

// Every contract violation in the library surfaces as this exception.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(message);
}

inline void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw Error(std::string(what) + " must be finite");
}

}  // namespace leakq
