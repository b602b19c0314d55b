#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hyjob {

// Error codes double as the `code` field of JOB_FAILED frames, so the
// numeric values are part of the wire format.
enum class ErrorCode : std::uint32_t {
  SizeMismatch = 1,
  InvalidSequenceCount = 2,
  MissingSequence = 3,
  PoolExhausted = 4,
  UnknownProducer = 5,
  RangeOutOfBounds = 6,
  SyntaxError = 7,
  ValidationError = 8,
  RegistryFrozen = 9,
  UnknownFunction = 10,
  UserFunctionPanic = 11,
  FetchFailed = 12,
  NotRetained = 13,
  RunFailed = 14,
  InvalidTarget = 15,
  InvalidRef = 16,
  FieldOverflow = 17,
  TruncatedFrame = 18,
  UnknownTag = 19,
  MalformedBody = 20,
  PeerClosed = 21,
  ConnectFailed = 22,
  EmptyChunk = 23,
  ShapeMismatch = 24,
  ZeroDiagonal = 25,
  InvalidBlocking = 26,
  MismatchedResults = 27,
  UnresolvedDependency = 28,
  InvalidConfig = 29,
  TypeMismatch = 30,
  Io = 31,
  Aborted = 32,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace hyjob
