#include "hyjob/error.hpp"

namespace hyjob {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::InvalidSequenceCount: return "InvalidSequenceCount";
    case ErrorCode::MissingSequence: return "MissingSequence";
    case ErrorCode::PoolExhausted: return "PoolExhausted";
    case ErrorCode::UnknownProducer: return "UnknownProducer";
    case ErrorCode::RangeOutOfBounds: return "RangeOutOfBounds";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::RegistryFrozen: return "RegistryFrozen";
    case ErrorCode::UnknownFunction: return "UnknownFunction";
    case ErrorCode::UserFunctionPanic: return "UserFunctionPanic";
    case ErrorCode::FetchFailed: return "FetchFailed";
    case ErrorCode::NotRetained: return "NotRetained";
    case ErrorCode::RunFailed: return "RunFailed";
    case ErrorCode::InvalidTarget: return "InvalidTarget";
    case ErrorCode::InvalidRef: return "InvalidRef";
    case ErrorCode::FieldOverflow: return "FieldOverflow";
    case ErrorCode::TruncatedFrame: return "TruncatedFrame";
    case ErrorCode::UnknownTag: return "UnknownTag";
    case ErrorCode::MalformedBody: return "MalformedBody";
    case ErrorCode::PeerClosed: return "PeerClosed";
    case ErrorCode::ConnectFailed: return "ConnectFailed";
    case ErrorCode::EmptyChunk: return "EmptyChunk";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ZeroDiagonal: return "ZeroDiagonal";
    case ErrorCode::InvalidBlocking: return "InvalidBlocking";
    case ErrorCode::MismatchedResults: return "MismatchedResults";
    case ErrorCode::UnresolvedDependency: return "UnresolvedDependency";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Aborted: return "Aborted";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace hyjob
