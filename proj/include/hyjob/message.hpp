#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hyjob/chunk.hpp"
#include "hyjob/error.hpp"
#include "hyjob/plan.hpp"

namespace hyjob {

inline constexpr std::uint8_t kProtocolVersion = 1;

enum class Tag : std::uint8_t {
  Hello = 0x01,
  AssignJob = 0x02,
  JobDone = 0x03,
  Fetch = 0x04,
  Chunks = 0x05,
  Release = 0x06,
  Inject = 0x07,
  InjectAck = 0x08,
  Shutdown = 0x09,
  JobFailed = 0x0A,
};

std::string_view to_string(Tag t);

enum class HolderKind : std::uint8_t { SubScheduler = 0, Worker = 1 };

/// Where a job's result lives.
struct ResultLocation {
  HolderKind kind = HolderKind::SubScheduler;
  std::uint32_t holder_id = 0;  // sub-scheduler id or worker id
  std::string address;
  std::size_t n_chunks = 0;
  friend bool operator==(const ResultLocation&, const ResultLocation&) = default;
};

struct LocatedRef {
  std::uint64_t producer = 0;
  std::uint32_t start = 0;
  std::uint32_t end = 0;
  HolderKind holder_kind = HolderKind::SubScheduler;
  std::string holder_addr;
  friend bool operator==(const LocatedRef&, const LocatedRef&) = default;
};

struct HelloMsg {
  std::uint32_t worker_id = 0;
  std::uint32_t cores = 0;
  std::uint8_t version = kProtocolVersion;
  std::string address;  // where peers fetch retained results from
  friend bool operator==(const HelloMsg&, const HelloMsg&) = default;
};

struct AssignJobMsg {
  std::uint64_t job_id = 0;
  std::uint32_t function_id = 0;
  std::uint32_t threads = 0;
  bool no_send = false;
  std::vector<DataChunk> inline_chunks;
  std::vector<LocatedRef> refs;
  std::uint32_t worker_id = 0;  // placement target, read by the sub-scheduler
  friend bool operator==(const AssignJobMsg&, const AssignJobMsg&) = default;
};

enum class Retention : std::uint8_t {
  Returned = 0,        // chunks included
  AtWorker = 1,        // retained by the worker that ran the job
  AtSubScheduler = 2,  // stored by the sub-scheduler (sub -> master only)
};

struct JobDoneMsg {
  std::uint64_t job_id = 0;
  Retention retention = Retention::Returned;
  std::uint32_t n_chunks = 0;
  std::vector<DataChunk> chunks;  // present only for Retention::Returned
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  friend bool operator==(const JobDoneMsg&, const JobDoneMsg&) = default;
};

struct FetchMsg {
  std::uint64_t producer = 0;
  std::uint32_t start = 0;
  std::uint32_t end = 0;
  friend bool operator==(const FetchMsg&, const FetchMsg&) = default;
};

struct ChunksMsg {
  std::uint64_t producer = 0;
  std::vector<DataChunk> chunks;
  friend bool operator==(const ChunksMsg&, const ChunksMsg&) = default;
};

struct ReleaseMsg {
  std::uint64_t producer = 0;
  friend bool operator==(const ReleaseMsg&, const ReleaseMsg&) = default;
};

struct InjectMsg {
  std::uint64_t origin = 0;
  InjectionRequest request;
  friend bool operator==(const InjectMsg&, const InjectMsg&) = default;
};

struct InjectAckMsg {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> mapping;  // placeholder -> assigned
  friend bool operator==(const InjectAckMsg&, const InjectAckMsg&) = default;
};

struct ShutdownMsg {
  friend bool operator==(const ShutdownMsg&, const ShutdownMsg&) = default;
};

struct JobFailedMsg {
  std::uint64_t job_id = 0;
  std::uint32_t code = 0;
  std::string message;
  friend bool operator==(const JobFailedMsg&, const JobFailedMsg&) = default;
};

using Message = std::variant<HelloMsg, AssignJobMsg, JobDoneMsg, FetchMsg, ChunksMsg, ReleaseMsg,
                             InjectMsg, InjectAckMsg, ShutdownMsg, JobFailedMsg>;

Tag tag_of(const Message& m);

/// Length-prefixed frame: 4-byte LE length of what follows, tag, body.
Bytes encode(const Message& m);
void encode_into(const Message& m, Bytes& out);

class DecodeError : public Error {
 public:
  DecodeError(ErrorCode code, std::size_t offset, const std::string& what)
      : Error(code, what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Decodes exactly one frame occupying all of `frame`. Throws DecodeError
/// (TruncatedFrame, UnknownTag or MalformedBody).
Message decode(std::span<const std::uint8_t> frame);

/// Decodes the frame at the front of `stream`; returns it and the number of
/// bytes consumed.
std::pair<Message, std::size_t> decode_prefix(std::span<const std::uint8_t> stream);

/// Decodes a tag + body (the frame minus its length prefix).
Message decode_body(std::span<const std::uint8_t> tag_and_body);

/// Short human-readable rendering for traces and logs.
std::string describe(const Message& m);

}  // namespace hyjob
