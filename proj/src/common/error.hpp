#pragma once

#include <stdexcept>
#include <string>

namespace hawkeye {

enum class ErrorCode {
  invalid_argument,
  shape_mismatch,
  out_of_range,
  bad_state,
  io,
  bad_magic,
  truncated,
  count_mismatch,
  checksum,
  version,
  model_mismatch,
};

const char* error_code_name(ErrorCode code) noexcept;

// Every failure raised by the core library. The C API maps `code()` onto
// hk_status values one to one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool ok, ErrorCode code, const std::string& message) {
  if (!ok) throw Error(code, message);
}

}  // namespace hawkeye
