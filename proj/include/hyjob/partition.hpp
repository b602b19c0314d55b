#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "hyjob/chunk.hpp"
#include "hyjob/plan.hpp"

namespace hyjob {

struct SequenceAssignment {
  std::size_t sequence_index = 0;
  ChunkRange chunk_slice;
  friend bool operator==(const SequenceAssignment&, const SequenceAssignment&) = default;
};

/// Balanced contiguous slices of [0, n_chunks); the first n_chunks % n_sequences
/// sequences get one extra chunk. Zero chunks yield a single empty slice.
std::vector<SequenceAssignment> partition_chunks(std::size_t n_chunks, std::size_t n_sequences);

/// Number of sequences a job runs with on a worker of `worker_cores` cores.
std::size_t effective_sequences(std::size_t spec_threads, std::size_t worker_cores,
                                std::size_t n_chunks);

/// Concatenates per-sequence outputs by sequence index. Keys must be 0..n-1.
FunctionData assemble_outputs(const std::map<std::size_t, FunctionData>& per_sequence);

/// The initial input pool with its consumption cursor.
class ChunkPool {
 public:
  ChunkPool() = default;
  explicit ChunkPool(std::vector<DataChunk> chunks) : chunks_(std::move(chunks)) {}

  std::size_t remaining() const { return chunks_.size() - cursor_; }
  std::size_t cursor() const { return cursor_; }

  /// Next `count` chunks; throws PoolExhausted.
  FunctionData take(std::size_t count);

 private:
  std::vector<DataChunk> chunks_;
  std::size_t cursor_ = 0;
};

/// Input for a binding: nothing, the next pool chunks, or the referenced
/// result slices concatenated in listed order.
FunctionData resolve_binding(const InputBinding& binding, ChunkPool& pool,
                             const std::map<JobId, FunctionData>& results);

/// Turns an optional range into a concrete one for a producer of
/// `n_chunks` chunks. Throws RangeOutOfBounds.
ChunkRange concrete_range(const std::optional<ChunkRange>& range, std::size_t n_chunks);

}  // namespace hyjob
