#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hyjob {

struct JobId {
  std::uint64_t value = 0;
  friend auto operator<=>(const JobId&, const JobId&) = default;
};

/// Half-open chunk index range [start, end).
struct ChunkRange {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - start; }
  friend bool operator==(const ChunkRange&, const ChunkRange&) = default;
};

/// Chunks of another job's result; no range means all of them.
struct ResultRef {
  JobId producer;
  std::optional<ChunkRange> range;
  friend bool operator==(const ResultRef&, const ResultRef&) = default;
};

struct NoInput {
  friend bool operator==(const NoInput&, const NoInput&) = default;
};
struct PoolInput {
  std::size_t count = 0;
  friend bool operator==(const PoolInput&, const PoolInput&) = default;
};
struct RefsInput {
  std::vector<ResultRef> refs;
  friend bool operator==(const RefsInput&, const RefsInput&) = default;
};
using InputBinding = std::variant<NoInput, PoolInput, RefsInput>;

struct JobSpec {
  JobId id;
  std::uint32_t function_id = 0;
  std::uint32_t threads = 0;  // 0 = all cores of the assigned worker
  InputBinding input;
  bool no_send = false;
  friend bool operator==(const JobSpec&, const JobSpec&) = default;
};

struct SegmentPlan {
  std::vector<JobSpec> jobs;
  friend bool operator==(const SegmentPlan&, const SegmentPlan&) = default;
};

struct AlgorithmPlan {
  std::vector<SegmentPlan> segments;
  friend bool operator==(const AlgorithmPlan&, const AlgorithmPlan&) = default;

  std::size_t job_count() const;
  const JobSpec* find(JobId id) const;
};

/// Producers named by a binding, deduplicated, in first-mention order.
std::vector<JobId> producers_of(const InputBinding& binding);

/// Throws ValidationError when ids are zero or duplicated, a ref names a job
/// that is not in a strictly earlier segment, or a range has end < start.
void validate_plan(const AlgorithmPlan& plan);

enum class Hybridism { NotHybrid, Loose, Strict };
std::string_view to_string(Hybridism h);

/// Strict: one segment holds several jobs and a multi-sequence job.
/// Loose: both kinds of parallelism exist, but never in the same segment.
Hybridism classify_hybridism(const AlgorithmPlan& plan,
                             const std::map<JobId, std::size_t>& sequence_counts);

/// Sequence counts for static analysis: declared threads, with 0 resolved
/// to `worker_cores`.
std::map<JobId, std::size_t> declared_sequence_counts(const AlgorithmPlan& plan,
                                                      std::size_t worker_cores);

// ---- dynamic job injection -------------------------------------------------

enum class InjectionTarget : std::uint8_t { CurrentSegment = 0, FollowingSegment = 1, AppendSegment = 2 };

/// A ref inside an injection template: either a real job id or the
/// placeholder of another template in the same request.
struct TemplateRef {
  bool placeholder = false;
  std::uint64_t producer = 0;
  std::optional<ChunkRange> range;
  friend bool operator==(const TemplateRef&, const TemplateRef&) = default;
};

struct TemplateRefs {
  std::vector<TemplateRef> refs;
  friend bool operator==(const TemplateRefs&, const TemplateRefs&) = default;
};
using TemplateBinding = std::variant<NoInput, PoolInput, TemplateRefs>;

struct JobTemplate {
  std::uint64_t placeholder = 0;
  // Extra segments past the request's target segment.
  std::uint32_t segment_delta = 0;
  std::uint32_t function_id = 0;
  std::uint32_t threads = 0;
  bool no_send = false;
  TemplateBinding input;
  friend bool operator==(const JobTemplate&, const JobTemplate&) = default;
};

struct InjectionRequest {
  InjectionTarget target = InjectionTarget::FollowingSegment;
  std::uint32_t offset = 1;  // FollowingSegment only; >= 1
  std::vector<JobTemplate> specs;
  friend bool operator==(const InjectionRequest&, const InjectionRequest&) = default;
};

using InjectionMapping = std::map<std::uint64_t, JobId>;

}  // namespace hyjob
