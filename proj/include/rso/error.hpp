#pragma once

#include <stdexcept>
#include <string>

namespace rso {

enum class ErrorCode {
  shape,        // dimension mismatch
  degenerate,   // rank-deficient or otherwise unusable input
  numeric,      // non-finite values encountered mid-computation
  config,       // invalid configuration or arguments
  io,           // file read/write failure
};

struct Error : std::runtime_error {
  ErrorCode code;
  Error(ErrorCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

[[noreturn]] inline void throw_shape(const std::string& msg) { throw Error(ErrorCode::shape, msg); }
[[noreturn]] inline void throw_degenerate(const std::string& msg) { throw Error(ErrorCode::degenerate, msg); }
[[noreturn]] inline void throw_numeric(const std::string& msg) { throw Error(ErrorCode::numeric, msg); }
[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorCode::config, msg); }
[[noreturn]] inline void throw_io(const std::string& msg) { throw Error(ErrorCode::io, msg); }

}  // namespace rso
