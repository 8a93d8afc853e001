#pragma once

#include <stdexcept>
#include <string>

namespace gridmap {

enum class ErrorCode {
  InvalidArgument = 1,
  Io = 2,
  Format = 3,
  Degenerate = 4,
  Config = 5,
  Undefined = 6,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above; the C
/// layer maps them 1:1 onto gm_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace gridmap
