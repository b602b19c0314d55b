#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hyjob/hub.hpp"
#include "hyjob/registry.hpp"
#include "hyjob/scheduler.hpp"

namespace hyjob {

enum class TransportKind {
  Inproc,   // deterministic single-threaded hub
  Threads,  // one loop thread per node over in-process queues
  Tcp,      // one loop thread per node over loopback sockets
};
enum class SpawnMode { Thread, Process };

struct RunOptions {
  ClusterConfig cluster;
  TransportKind transport = TransportKind::Inproc;
  std::uint64_t seed = 1;
  bool retain_all = false;
  std::size_t max_segments = 100000;
  /// Process spawning needs TCP and an executable with a `worker` subcommand
  /// that registers the same functions in the same order.
  SpawnMode spawn = SpawnMode::Thread;
  std::string worker_executable;
  bool record_trace = true;
};

struct RunResult {
  /// Every result that was not released during the run.
  std::map<JobId, FunctionData> results;
  std::vector<JobReport> report;
  std::vector<InjectionRecord> injections;
  std::vector<runtime::TraceEntry> trace;  // Inproc only
  std::vector<std::int64_t> segment_end_ns;
  std::map<JobId, std::size_t> job_segments;  // including injected jobs
  std::size_t segments = 0;
  std::int64_t wall_ns = 0;
  std::vector<std::string> warnings;
};

/// A job failed, or the run could not complete; carries the job and cause.
class RunFailed : public Error {
 public:
  RunFailed(JobId job, ErrorCode cause, const std::string& message)
      : Error(ErrorCode::RunFailed, "job J" + std::to_string(job.value) + " failed (" +
                                        std::string(to_string(cause)) + "): " + message),
        job_(job),
        cause_(cause) {}
  JobId job() const noexcept { return job_; }
  ErrorCode cause() const noexcept { return cause_; }

 private:
  JobId job_;
  ErrorCode cause_;
};

/// Executes `plan` segment by segment on a master, the configured
/// sub-schedulers and lazily spawned workers. Freezes the registry.
/// Throws UnknownFunction before dispatching anything, RunFailed otherwise.
RunResult run_algorithm(const AlgorithmPlan& plan, const FunctionRegistry& registry, std::vector<DataChunk> pool,
                        const RunOptions& options = {});

/// Report records: a CSV header and one line per completed job, then
/// `# `-prefixed summary lines.
void write_report(std::ostream& out, const RunResult& result);
/// Parses the records of write_report; throws ValidationError on schema
/// violations.
std::vector<JobReport> parse_report(std::istream& in);

inline constexpr const char* kReportHeader = "job_id,segment,worker,t_start_ns,t_end_ns,bytes_in,bytes_out";

}  // namespace hyjob
