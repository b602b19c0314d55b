#include "hyjob/partition.hpp"

#include <algorithm>
#include <string>

namespace hyjob {

std::vector<SequenceAssignment> partition_chunks(std::size_t n_chunks, std::size_t n_sequences) {
  if (n_sequences < 1) fail(ErrorCode::InvalidSequenceCount, "at least one sequence is required");
  if (n_chunks == 0) return {SequenceAssignment{0, {0, 0}}};
  std::size_t base = n_chunks / n_sequences;
  std::size_t extra = n_chunks % n_sequences;
  std::vector<SequenceAssignment> out;
  out.reserve(n_sequences);
  std::size_t start = 0;
  for (std::size_t s = 0; s < n_sequences; ++s) {
    std::size_t len = base + (s < extra ? 1 : 0);
    out.push_back({s, {start, start + len}});
    start += len;
  }
  return out;
}

std::size_t effective_sequences(std::size_t spec_threads, std::size_t worker_cores,
                                std::size_t n_chunks) {
  std::size_t base = spec_threads == 0 ? worker_cores : spec_threads;
  if (n_chunks == 0) return 1;
  return std::max<std::size_t>(1, std::min(base, n_chunks));
}

FunctionData assemble_outputs(const std::map<std::size_t, FunctionData>& per_sequence) {
  FunctionData out;
  std::size_t expected = 0;
  for (const auto& [index, data] : per_sequence) {
    if (index != expected) {
      fail(ErrorCode::MissingSequence, "no output for sequence " + std::to_string(expected));
    }
    out.append(data);
    ++expected;
  }
  return out;
}

FunctionData ChunkPool::take(std::size_t count) {
  if (count > remaining()) {
    fail(ErrorCode::PoolExhausted, "pool has " + std::to_string(remaining()) +
                                       " chunks left, binding wants " + std::to_string(count));
  }
  auto first = chunks_.begin() + static_cast<std::ptrdiff_t>(cursor_);
  cursor_ += count;
  return FunctionData(std::vector<DataChunk>(first, first + static_cast<std::ptrdiff_t>(count)));
}

ChunkRange concrete_range(const std::optional<ChunkRange>& range, std::size_t n_chunks) {
  if (!range) return {0, n_chunks};
  if (range->start > range->end || range->end > n_chunks) {
    fail(ErrorCode::RangeOutOfBounds, "range [" + std::to_string(range->start) + ".." +
                                          std::to_string(range->end) + "] exceeds " +
                                          std::to_string(n_chunks) + " chunks");
  }
  return *range;
}

FunctionData resolve_binding(const InputBinding& binding, ChunkPool& pool,
                             const std::map<JobId, FunctionData>& results) {
  if (std::holds_alternative<NoInput>(binding)) return {};
  if (const auto* p = std::get_if<PoolInput>(&binding)) return pool.take(p->count);
  const auto& refs = std::get<RefsInput>(binding).refs;
  FunctionData out;
  for (const auto& r : refs) {
    auto it = results.find(r.producer);
    if (it == results.end()) {
      fail(ErrorCode::UnknownProducer, "no results for R" + std::to_string(r.producer.value));
    }
    auto range = concrete_range(r.range, it->second.size());
    out.append(it->second.slice(range.start, range.end));
  }
  return out;
}

}  // namespace hyjob
