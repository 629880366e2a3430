#pragma once

#include <stdexcept>
#include <string>

namespace millimamba {

// Bad input: wrong shapes, out-of-range arguments, malformed files or configs.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced NaN/Inf or otherwise failed at run time.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& what) { throw ValidationError(what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(what);
}

}  // namespace millimamba
