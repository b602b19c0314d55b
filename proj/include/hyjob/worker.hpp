#pragma once

#include <atomic>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>

#include "hyjob/node.hpp"
#include "hyjob/partition.hpp"
#include "hyjob/registry.hpp"
#include "hyjob/thread_pool.hpp"

namespace hyjob {

/// A job as shipped to a worker: spec fields, inline (pool) chunks, and
/// located refs to pull before running.
using JobAssignment = AssignJobMsg;

struct JobOutcome {
  JobId job;
  bool retained = false;
  FunctionData chunks;  // empty when retained
  std::size_t n_chunks = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
};

/// Retention cache and bookkeeping of one worker.
class WorkerState {
 public:
  WorkerState(std::uint32_t worker_id, std::uint32_t cores) : worker_id_(worker_id), cores_(cores) {}

  std::uint32_t worker_id() const { return worker_id_; }
  std::uint32_t cores() const { return cores_; }

  void begin(JobId job);
  /// Ends an active job; no_send results move into the retention cache.
  JobOutcome finish(JobId job, bool no_send, FunctionData output, std::uint64_t bytes_in);
  void abandon(JobId job) { active_.erase(job); }

  /// Slice of a retained result. Throws NotRetained or RangeOutOfBounds.
  FunctionData serve_fetch(JobId producer, ChunkRange range) const;
  /// Idempotent.
  void release(JobId producer) { retained_.erase(producer); }

  bool is_retained(JobId producer) const { return retained_.count(producer) != 0; }
  bool is_active(JobId job) const { return active_.count(job) != 0; }
  std::size_t retained_count() const { return retained_.size(); }
  std::size_t active_count() const { return active_.size(); }

 private:
  std::uint32_t worker_id_;
  std::uint32_t cores_;
  std::map<JobId, FunctionData> retained_;
  std::set<JobId> active_;
};

/// One job in flight: its input split into sequences and the per-sequence
/// outputs as they arrive.
struct JobRun {
  JobId id;
  std::uint32_t function_id = 0;
  bool no_send = false;
  FunctionData input;
  std::uint64_t bytes_in = 0;
  std::uint64_t launch_no = 0;
  std::vector<SequenceAssignment> slices;
  std::vector<FunctionData> outputs;
  std::vector<std::optional<Error>> errors;
  std::atomic<std::size_t> remaining{0};

  /// Assembled output; rethrows the failure of the lowest failing sequence.
  FunctionData collect() const;
};

using InjectHook = std::function<InjectionMapping(JobRun& run, std::size_t sequence, const InjectionRequest&)>;

/// Prepares a run with effective_sequences(threads, cores, n_chunks) slices.
std::shared_ptr<JobRun> prepare_job_run(const JobAssignment& a, FunctionData input, std::uint32_t cores);

/// Runs each sequence as a pool task. `on_last` fires on the thread that
/// finishes the final sequence; `after_sequence` after every sequence.
void launch_job_run(const std::shared_ptr<JobRun>& run, const FunctionRegistry& registry, ThreadPool& pool,
                    InjectHook inject, std::function<void(const std::shared_ptr<JobRun>&)> on_last,
                    std::function<void()> after_sequence = {});

/// Synchronous execution for direct use and tests: pulls refs through
/// `fetch`, runs the sequences on `pool`, and settles retention in `state`.
JobOutcome execute_job(WorkerState& state, const FunctionRegistry& registry, ThreadPool& pool,
                       const JobAssignment& a,
                       const std::function<FunctionData(const LocatedRef&)>& fetch,
                       InjectHook inject = {});

namespace runtime {

/// Worker actor: connects to its sub-scheduler, runs assigned jobs on
/// `cores` lanes, serves FETCH/RELEASE for retained results.
class WorkerNode final : public Node {
 public:
  WorkerNode(std::uint32_t worker_id, std::uint32_t cores, std::string sub_address,
             const FunctionRegistry& registry);
  ~WorkerNode() override;

  void start(NodeHost& host) override;
  void on_message(PeerId from, Message msg) override;
  void on_peer_closed(PeerId peer) override;

  const WorkerState& state() const { return state_; }

 private:
  struct PendingJob {
    JobAssignment assignment;
    std::vector<std::optional<FunctionData>> slots;  // refs, in binding order
    std::size_t missing = 0;
    bool failed = false;
  };
  struct FetchWait {
    std::uint64_t job;
    std::size_t slot;
  };

  void on_assign(JobAssignment a);
  void on_chunks(PeerId from, ChunksMsg m);
  void on_fetch_error(PeerId from, const JobFailedMsg& m);
  void on_fetch(PeerId from, const FetchMsg& m);
  void on_inject_ack(const InjectAckMsg& m);
  void shutdown();
  void try_launch(std::uint64_t job);
  void fail_job(std::uint64_t job, ErrorCode code, const std::string& why);
  void complete(const std::shared_ptr<JobRun>& run);
  InjectionMapping inject_from_sequence(JobRun& run, std::size_t sequence, const InjectionRequest& req);
  PeerId peer_for(const std::string& address);

  WorkerState state_;
  std::string sub_address_;
  const FunctionRegistry& registry_;
  NodeHost* host_ = nullptr;
  PeerId sub_ = 0;
  std::unique_ptr<ThreadPool> pool_;
  std::map<std::string, PeerId> peers_;
  std::map<std::uint64_t, PendingJob> pending_;
  std::map<PeerId, std::deque<FetchWait>> fetch_waits_;
  std::deque<std::shared_ptr<std::promise<InjectionMapping>>> inject_waits_;
  // Every injection promise ever handed out, so teardown can unblock
  // sequences whose request never reached the control loop.
  std::mutex all_waits_mu_;
  std::vector<std::weak_ptr<std::promise<InjectionMapping>>> all_waits_;
  std::uint64_t launches_ = 0;
  std::atomic<std::uint64_t> inject_events_{0};
  bool stopping_ = false;
};

}  // namespace runtime
}  // namespace hyjob
