#include "hyjob/apps.hpp"

#include <algorithm>

#include "hyjob/jacobi.hpp"

namespace hyjob::apps {

namespace {

template <typename F>
decltype(auto) with_type(ElementType t, F&& f) {
  switch (t) {
    case ElementType::U8: return f(std::uint8_t{});
    case ElementType::I32: return f(std::int32_t{});
    case ElementType::I64: return f(std::int64_t{});
    case ElementType::F32: return f(float{});
    case ElementType::F64: return f(double{});
  }
  fail(ErrorCode::TypeMismatch, "unknown element type");
}

template <typename Op>
void elementwise(const FunctionData& in, FunctionData& out, Op op) {
  for (const auto& c : in) {
    with_type(c.dtype(), [&](auto zero) {
      using T = decltype(zero);
      auto v = c.values<T>();
      std::vector<T> r(v.size());
      std::transform(v.begin(), v.end(), r.begin(), [&](T x) { return static_cast<T>(op(x)); });
      out.push_back(DataChunk::of(r));
    });
  }
}

}  // namespace

void fn_ramp(const FunctionData& in, FunctionData& out) {
  if (in.empty()) {
    for (int k = 0; k < 10; ++k) {
      out.push_back(DataChunk::of<double>({4.0 * k + 1, 4.0 * k + 2, 4.0 * k + 3, 4.0 * k + 4}));
    }
    return;
  }
  elementwise(in, out, [](auto x) { return x + 1; });
}

void fn_square(const FunctionData& in, FunctionData& out) {
  elementwise(in, out, [](auto x) { return x * x; });
}

void fn_negate(const FunctionData& in, FunctionData& out) {
  elementwise(in, out, [](auto x) { return -x; });
}

void fn_search_max(const FunctionData& in, FunctionData& out) {
  if (in.empty()) return;
  auto dtype = in[0].dtype();
  bool all_single = true;
  for (const auto& c : in) {
    if (c.count() == 0) fail(ErrorCode::EmptyChunk, "search_max needs non-empty chunks");
    if (c.dtype() != dtype) fail(ErrorCode::TypeMismatch, "search_max needs chunks of one element type");
    all_single = all_single && c.count() == 1;
  }
  with_type(dtype, [&](auto zero) {
    using T = decltype(zero);
    if (all_single) {
      T best = in[0].values<T>()[0];
      for (const auto& c : in) best = std::max(best, c.values<T>()[0]);
      out.push_back(DataChunk::of<T>({best}));
      return;
    }
    for (const auto& c : in) {
      auto v = c.values<T>();
      out.push_back(DataChunk::of<T>({*std::max_element(v.begin(), v.end())}));
    }
  });
}

void fn_sum(const FunctionData& in, FunctionData& out) {
  double total = 0;
  for (const auto& c : in) {
    with_type(c.dtype(), [&](auto zero) {
      using T = decltype(zero);
      for (T x : c.values<T>()) total += static_cast<double>(x);
    });
  }
  out.push_back(DataChunk::of<double>({total}));
}

void fn_forward(const FunctionData& in, FunctionData& out) { out.append(in); }

BuiltinIds register_builtins(FunctionRegistry& registry) {
  BuiltinIds ids;
  ids.ramp = registry.add_function(fn_ramp);
  ids.square = registry.add_function(fn_square);
  ids.search_max = registry.add_function(fn_search_max);
  ids.negate = registry.add_function(fn_negate);
  ids.sum = registry.add_function(fn_sum);
  ids.forward = registry.add_function(fn_forward);
  ids.jacobi_update = registry.add_function(jacobi::fn_update);
  ids.jacobi_apply = registry.add_function(jacobi::fn_apply);
  ids.jacobi_check = registry.add_function(jacobi::fn_check);
  return ids;
}

AlgorithmPlan build_max_plan(std::size_t n_chunks, std::uint32_t search_max_id) {
  if (n_chunks == 0) fail(ErrorCode::ValidationError, "the max search needs at least one chunk");
  AlgorithmPlan plan;
  SegmentPlan first, second;
  RefsInput reduce;
  if (n_chunks == 1) {
    first.jobs.push_back({JobId{1}, search_max_id, 0, PoolInput{1}, false});
    reduce.refs.push_back({JobId{1}, std::nullopt});
  } else {
    first.jobs.push_back({JobId{1}, search_max_id, 0, PoolInput{(n_chunks + 1) / 2}, false});
    first.jobs.push_back({JobId{2}, search_max_id, 0, PoolInput{n_chunks / 2}, false});
    reduce.refs.push_back({JobId{1}, std::nullopt});
    reduce.refs.push_back({JobId{2}, std::nullopt});
  }
  auto final_id = JobId{first.jobs.size() + 1};
  second.jobs.push_back({final_id, search_max_id, 1, std::move(reduce), false});
  plan.segments = {std::move(first), std::move(second)};
  return plan;
}

double scan_max(const std::vector<DataChunk>& chunks) {
  bool any = false;
  double best = 0;
  for (const auto& c : chunks) {
    for (double v : c.values<double>()) {
      best = any ? std::max(best, v) : v;
      any = true;
    }
  }
  if (!any) fail(ErrorCode::EmptyChunk, "no values to scan");
  return best;
}

}  // namespace hyjob::apps
