#pragma once

#include <stdexcept>
#include <string>

namespace mahp {

enum class ErrorCode {
  invalid_argument,
  dimension,
  index,
  parse,
  version,
  nonstationary,
  io,
  runtime,
};

// Every failure raised by the library carries one of the codes above so the
// C API can translate it into a status value without string matching.
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

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace mahp
