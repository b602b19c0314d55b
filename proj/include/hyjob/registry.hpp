#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <type_traits>

#include "hyjob/chunk.hpp"
#include "hyjob/plan.hpp"

namespace hyjob {

/// What a running sequence can see of its job.
class JobContext {
 public:
  virtual ~JobContext() = default;
  virtual JobId job_id() const = 0;
  virtual std::size_t sequence_index() const = 0;
  virtual std::size_t sequence_count() const = 0;

  /// Adds jobs to the current or a later segment. Blocks until the master
  /// has assigned ids; returns placeholder -> assigned id.
  virtual InjectionMapping inject(const InjectionRequest& request) = 0;
};

/// Context for direct invocations outside a run; inject() throws.
class DetachedContext final : public JobContext {
 public:
  explicit DetachedContext(JobId id = {}, std::size_t index = 0, std::size_t count = 1)
      : id_(id), index_(index), count_(count) {}
  JobId job_id() const override { return id_; }
  std::size_t sequence_index() const override { return index_; }
  std::size_t sequence_count() const override { return count_; }
  InjectionMapping inject(const InjectionRequest&) override;

 private:
  JobId id_;
  std::size_t index_;
  std::size_t count_;
};

/// A registered function reads `input` and appends chunks to `output`. It
/// may run concurrently with itself on disjoint inputs.
using UserFunction = std::function<void(const FunctionData& input, FunctionData& output, JobContext& ctx)>;

/// Function table shared by every worker. Ids follow registration order
/// starting at 1; the table is frozen once a run starts.
class FunctionRegistry {
 public:
  template <typename F>
  std::uint32_t add_function(F&& f) {
    if constexpr (std::is_invocable_v<F&, const FunctionData&, FunctionData&, JobContext&>) {
      return add(UserFunction(std::forward<F>(f)));
    } else {
      static_assert(std::is_invocable_v<F&, const FunctionData&, FunctionData&>,
                    "user functions take (const FunctionData&, FunctionData&[, JobContext&])");
      return add(UserFunction(
          [fn = std::forward<F>(f)](const FunctionData& in, FunctionData& out, JobContext&) mutable {
            fn(in, out);
          }));
    }
  }

  void freeze() const noexcept { frozen_.store(true); }
  bool frozen() const noexcept { return frozen_.load(); }
  bool contains(std::uint32_t id) const { return functions_.count(id) != 0; }
  std::size_t size() const { return functions_.size(); }

  /// Runs one function; exceptions it raises surface as UserFunctionPanic.
  FunctionData invoke(std::uint32_t id, const FunctionData& input, JobContext& ctx) const;
  FunctionData invoke(std::uint32_t id, const FunctionData& input) const;

 private:
  std::uint32_t add(UserFunction f);

  std::map<std::uint32_t, UserFunction> functions_;
  std::uint32_t next_id_ = 1;
  mutable std::atomic<bool> frozen_{false};
};

}  // namespace hyjob
