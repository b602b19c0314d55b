#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hyjob/message.hpp"
#include "hyjob/partition.hpp"
#include "hyjob/plan.hpp"

namespace hyjob {

/// Shape of the cluster, fixed for a run. Workers are numbered 1..N
/// sub-scheduler-major: worker w belongs to sub-scheduler (w-1)/W + 1.
struct ClusterConfig {
  std::uint32_t n_subschedulers = 1;
  std::uint32_t workers_per_subscheduler = 1;
  std::uint32_t cores_per_worker = 1;

  /// Throws InvalidConfig unless every field is positive.
  void validate() const;
  std::uint32_t total_workers() const { return n_subschedulers * workers_per_subscheduler; }
  std::uint32_t sub_of(std::uint32_t worker_id) const { return (worker_id - 1) / workers_per_subscheduler + 1; }
};

struct Placement {
  std::uint32_t sub_id = 0;
  std::uint32_t worker_id = 0;
  friend bool operator==(const Placement&, const Placement&) = default;
};

/// Remaining core budgets of one segment's workers; lets jobs injected into
/// a running segment be placed after the initial packing.
class PlacementState {
 public:
  explicit PlacementState(const ClusterConfig& config);
  /// Lowest-indexed open worker whose budget covers the demand, else the
  /// next unopened worker, else the open worker with the most budget left.
  Placement place(const JobSpec& job);
  std::uint32_t demand(const JobSpec& job) const;

 private:
  ClusterConfig config_;
  std::vector<std::int64_t> remaining_;  // one per opened worker
};

/// First-fit-decreasing packing by declared threads (0 = a whole worker),
/// ties broken by ascending id. Pure function of its arguments.
std::map<JobId, Placement> place_jobs(const SegmentPlan& segment, const ClusterConfig& config);

enum class JobState { Pending, Dispatched, Done, Failed };
std::string_view to_string(JobState s);

struct JobRecord {
  JobSpec spec;
  std::size_t segment = 0;
  JobState state = JobState::Pending;
  std::optional<Placement> placement;
  std::optional<ResultLocation> location;
  bool released = false;
  bool injected = false;
  std::int64_t t_start_ns = 0;
  std::int64_t t_end_ns = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
};

/// One line of the run report.
struct JobReport {
  std::uint64_t job_id = 0;
  std::size_t segment = 0;
  std::uint32_t worker = 0;
  std::int64_t t_start_ns = 0;
  std::int64_t t_end_ns = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  friend bool operator==(const JobReport&, const JobReport&) = default;
};

struct InjectionRecord {
  std::uint64_t origin = 0;
  std::size_t segment = 0;  // segment the origin ran in
  std::vector<std::uint64_t> assigned;
};

struct SchedulerOptions {
  bool retain_all = false;
  /// Injections may not grow the plan beyond this many segments.
  std::size_t max_segments = 100000;
};

/// Message for the sub-scheduler `sub_id`.
struct Outgoing {
  std::uint32_t sub_id = 0;
  Message msg;
};

struct JobFailure {
  std::uint64_t job_id = 0;
  ErrorCode code = ErrorCode::RunFailed;
  std::string message;
};

/// The master's bookkeeping as a pure state machine: inputs are protocol
/// events, outputs are messages for sub-schedulers. It never holds result
/// chunks, only where they live.
class SchedulerCore {
 public:
  SchedulerCore(AlgorithmPlan plan, ClusterConfig config, std::vector<DataChunk> pool,
                SchedulerOptions options = {});

  /// Where a sub-scheduler serves the results it stores.
  void set_sub_address(std::uint32_t sub_id, std::string address);
  void on_worker_hello(std::uint32_t worker_id, const std::string& address);

  /// Dispatches the first non-empty segment.
  std::vector<Outgoing> start(std::int64_t now_ns);
  std::vector<Outgoing> on_job_done(const JobDoneMsg& m, std::uint32_t from_sub, std::int64_t now_ns);
  void on_job_failed(const JobFailedMsg& m);

  /// Validates and appends injected jobs; jobs aimed at the running segment
  /// are dispatched into `out`. Throws InvalidTarget or InvalidRef.
  InjectionMapping inject(std::uint64_t origin, const InjectionRequest& request, std::vector<Outgoing>& out,
                          std::int64_t now_ns);

  bool finished() const { return finished_; }
  const std::optional<JobFailure>& failure() const { return failure_; }
  /// Records a run-level failure not tied to a completion message.
  void abort(JobFailure f);

  /// Results still alive at the end of the run, by job id.
  std::vector<std::pair<JobId, ResultLocation>> live_results() const;
  std::vector<JobReport> report() const;
  const std::vector<InjectionRecord>& injections() const { return injections_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::vector<std::int64_t>& segment_end_ns() const { return segment_end_ns_; }
  const std::map<JobId, JobRecord>& records() const { return records_; }
  const AlgorithmPlan& plan() const { return plan_; }
  std::size_t current_segment() const { return current_; }
  std::set<JobId> released() const;

 private:
  void dispatch_job(JobRecord& rec, std::vector<Outgoing>& out, std::int64_t now_ns);
  void open_segment(std::vector<Outgoing>& out, std::int64_t now_ns);
  void close_segment(std::vector<Outgoing>& out, std::int64_t now_ns);
  void add_consumer_refs(const InputBinding& binding);
  std::string holder_address(const ResultLocation& loc) const;

  AlgorithmPlan plan_;
  ClusterConfig config_;
  ChunkPool pool_;
  SchedulerOptions options_;
  std::map<JobId, JobRecord> records_;
  std::map<JobId, int> refcount_;
  std::set<JobId> release_candidates_;  // consumed producers whose refcount reached zero
  std::map<std::uint32_t, std::string> sub_addresses_;
  std::map<std::uint32_t, std::string> worker_addresses_;
  std::optional<PlacementState> placement_;
  std::size_t current_ = 0;
  std::size_t outstanding_ = 0;  // jobs of the current segment not yet Done
  std::uint64_t next_id_ = 1;
  bool started_ = false;
  bool finished_ = false;
  std::optional<JobFailure> failure_;
  std::vector<InjectionRecord> injections_;
  std::vector<std::string> warnings_;
  std::vector<std::int64_t> segment_end_ns_;
};

}  // namespace hyjob
