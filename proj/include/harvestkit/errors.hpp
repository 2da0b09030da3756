#pragma once

#include <stdexcept>
#include <string>

namespace hk {

enum class ErrorCode {
  ok = 0,
  invalid_argument = 1,
  domain = 2,
  capacity = 3,
  precondition = 4,
  numerical = 5,
  not_converged = 6,
  io = 7,
  parse = 8,
  internal = 9,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorCode::domain, w) {}
};
struct CapacityError : Error {
  explicit CapacityError(const std::string& w) : Error(ErrorCode::capacity, w) {}
};
struct PreconditionError : Error {
  explicit PreconditionError(const std::string& w) : Error(ErrorCode::precondition, w) {}
};
struct NumericalError : Error {
  explicit NumericalError(const std::string& w) : Error(ErrorCode::numerical, w) {}
};
struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& w) : Error(ErrorCode::not_converged, w) {}
};
struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& w) : Error(ErrorCode::invalid_argument, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorCode::io, w) {}
};
struct ParseError : Error {
  ParseError(const std::string& w, std::size_t pos) : Error(ErrorCode::parse, w), position(pos) {}
  std::size_t position;
};

}  // namespace hk
