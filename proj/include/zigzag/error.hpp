#pragma once

#include <stdexcept>
#include <string>

namespace zigzag {

// Mirrors the zz_status values of the C API (see include/zigzag.h).
enum class ErrorCode : int {
  Ok = 0,
  Diverges = 1,
  InvalidArgument = 2,
  DivisionByZero = 3,
  FieldMismatch = 4,
  EmptyQueue = 5,
  OffsetTooLarge = 6,
  InconsistentSystem = 7,
  InvalidProbability = 8,
  NotFound = 9,
  InvalidRate = 10,
  NotAchievable = 11,
  InvalidConfig = 12,
  HorizonExceeded = 13,
  Io = 14,
  Internal = 15,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string &what) {
  if (!ok) fail(code, what);
}

}  // namespace zigzag
