#pragma once

#include <stdexcept>
#include <string>

namespace hlpow {

enum class ErrorKind {
  MalformedDocument,
  SchemaViolation,
  InvariantViolation,
  DanglingIrReference,
  WidthMismatch,
  UnsupportedOpcode,
  DivisionByZero,
  InvalidLatency,
  ZeroBaseline,
  EmptyDataset,
  NonConvergence,
  LayoutMismatch,
  LengthMismatch,
  InvalidPartition,
  EmptyRegion,
  EmptyReferenceSet,
  InvalidArgument,
  IoFailure,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace hlpow
