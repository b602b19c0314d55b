#pragma once

#include <map>
#include <vector>

#include "hyjob/registry.hpp"

namespace hyjob {

struct ReferenceResult {
  std::map<JobId, FunctionData> results;  // every job, nothing released
  AlgorithmPlan plan;                     // including injected jobs
  std::size_t injections = 0;
};

/// Single-threaded interpreter with the framework's semantics: segments in
/// order, pool bindings resolved in plan-list order, jobs run in ascending
/// id order, each split into effective_sequences(threads, cores, n) slices
/// that run one after another. Injection is supported.
ReferenceResult run_reference(const AlgorithmPlan& plan, const FunctionRegistry& registry,
                              std::vector<DataChunk> pool, std::uint32_t cores_per_worker,
                              std::size_t max_segments = 100000);

}  // namespace hyjob
