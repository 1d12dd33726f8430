#pragma once

#include <stdexcept>
#include <string>

namespace osp {

// Error categories mirror the status codes of the C API.
enum class ErrorCode {
  InvalidArgument = 1,
  InvalidSplit,
  OutOfDomain,
  Index,
  Conditioning,
  Pivot,
  Size,
  Degenerate,
  Io,
  Parse,
  NotStandardForm,
  Internal,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

/// Raised when a numerically singular matrix is met; carries the condition estimate.
class ConditioningError : public Error {
public:
  ConditioningError(const std::string &what, double condition)
      : Error(ErrorCode::Conditioning, what), condition_(condition) {}
  double condition_estimate() const noexcept { return condition_; }

private:
  double condition_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string &what) {
  if (!cond)
    throw Error(code, what);
}

} // namespace osp
