#pragma once

#include <stdexcept>
#include <string>

namespace mavg {

enum class ErrorCode {
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kNumerical = 3,
  kConvergence = 4,
  kIo = 5,
  kRefused = 6,
};

/// Exception carrying a category that the C API maps onto status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

}  // namespace mavg
