#include "gridmap/error.hpp"

namespace gridmap {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Format: return "format error";
    case ErrorCode::Degenerate: return "degenerate input";
    case ErrorCode::Config: return "configuration error";
    case ErrorCode::Undefined: return "undefined result";
  }
  return "unknown error";
}

}  // namespace gridmap
