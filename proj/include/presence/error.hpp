#pragma once

#include <stdexcept>
#include <string>

namespace presence {

enum class ErrorCode {
  invalid_argument,
  not_found,
  conflict,
  precondition,
  corrupt,
  io,
};

// Single exception type for the library; the code lets the service map
// failures onto HTTP statuses without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace presence
