#pragma once

#include <cstdint>
#include <vector>

#include "hyjob/registry.hpp"

namespace hyjob::apps {

/// Elementwise functions accept any element type and keep it.

/// Without input: ten F64 chunks of four values, chunk k holding
/// 4k+1 .. 4k+4. With input: every element plus one.
void fn_ramp(const FunctionData& in, FunctionData& out);
void fn_square(const FunctionData& in, FunctionData& out);
void fn_negate(const FunctionData& in, FunctionData& out);
/// One single-element chunk per input chunk holding its maximum. When
/// every input chunk already has one element, reduces them to a single
/// chunk with the overall maximum. Throws EmptyChunk, TypeMismatch.
void fn_search_max(const FunctionData& in, FunctionData& out);
/// One F64 chunk with the sum of every element of the slice.
void fn_sum(const FunctionData& in, FunctionData& out);
/// Identity.
void fn_forward(const FunctionData& in, FunctionData& out);

/// Ids of the bundled functions, in registration order.
struct BuiltinIds {
  std::uint32_t ramp = 0, square = 0, search_max = 0, negate = 0, sum = 0, forward = 0;
  std::uint32_t jacobi_update = 0, jacobi_apply = 0, jacobi_check = 0;
};

/// Registers every bundled function. On an empty registry the ids are
/// 1 ramp, 2 square, 3 search_max, 4 negate, 5 sum, 6 forward,
/// 7 jacobi_update, 8 jacobi_apply, 9 jacobi_check.
BuiltinIds register_builtins(FunctionRegistry& registry);

/// Two-stage maximum search over `n_chunks` pool chunks: two first-stage
/// jobs split the pool (one if it has a single chunk), a final job
/// reduces their per-chunk maxima.
AlgorithmPlan build_max_plan(std::size_t n_chunks, std::uint32_t search_max_id);

/// Overall maximum of F64 chunks by direct scan. Throws EmptyChunk.
double scan_max(const std::vector<DataChunk>& chunks);

}  // namespace hyjob::apps
