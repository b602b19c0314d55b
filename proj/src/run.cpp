#include "hyjob/run.hpp"

#include <chrono>
#include <istream>
#include <ostream>
#include <sstream>

#include "hyjob/nodes.hpp"
#include "hyjob/threaded.hpp"
#include "hyjob/worker.hpp"

namespace hyjob {

namespace {

using runtime::CollectorNode;
using runtime::LiveResults;
using runtime::MasterNode;
using runtime::SubSchedulerNode;

class HubSpawner final : public runtime::WorkerSpawner {
 public:
  HubSpawner(runtime::InprocHub& hub, const FunctionRegistry& registry) : hub_(hub), registry_(registry) {}
  void spawn(std::uint32_t worker_id, std::uint32_t cores, const std::string& sub_address) override {
    hub_.add(std::make_unique<runtime::WorkerNode>(worker_id, cores, sub_address, registry_));
  }

 private:
  runtime::InprocHub& hub_;
  const FunctionRegistry& registry_;
};

void check_functions(const AlgorithmPlan& plan, const FunctionRegistry& registry) {
  for (const auto& seg : plan.segments) {
    for (const auto& job : seg.jobs) {
      if (!registry.contains(job.function_id)) {
        fail(ErrorCode::UnknownFunction, "J" + std::to_string(job.id.value) + " uses unregistered function " +
                                             std::to_string(job.function_id));
      }
    }
  }
}

void run_on_hub(SchedulerCore& core, const FunctionRegistry& registry, const RunOptions& options,
                std::map<JobId, FunctionData>& results, std::optional<std::string>& collect_error,
                std::vector<runtime::TraceEntry>& trace) {
  runtime::InprocHub hub(options.seed, options.record_trace);
  HubSpawner spawner(hub, registry);
  std::map<std::uint32_t, std::string> subs;
  for (std::uint32_t s = 1; s <= options.cluster.n_subschedulers; ++s) {
    auto idx = hub.add(std::make_unique<SubSchedulerNode>(s, options.cluster, spawner));
    subs[s] = runtime::InprocHub::address_of(idx);
  }
  auto master_idx = static_cast<std::uint32_t>(hub.size());
  auto collector_idx = master_idx + 1;
  hub.add(std::make_unique<MasterNode>(core, subs, [&hub, collector_idx](std::optional<LiveResults> live) {
    auto& collector = static_cast<CollectorNode&>(hub.node(collector_idx));
    hub.host(collector_idx).post({0, 0, 0}, [&collector, live = std::move(live)] {
      if (live) collector.begin(*live);
      else collector.abort();
    });
  }));
  hub.add(std::make_unique<CollectorNode>(runtime::InprocHub::address_of(master_idx), results));
  hub.run();
  auto& collector = static_cast<CollectorNode&>(hub.node(collector_idx));
  collect_error = collector.error();
  if (!core.failure() && !collector.done()) {
    core.abort({0, ErrorCode::Aborted, "the run stalled before every job completed"});
  }
  trace = hub.trace();
}

void run_threaded(SchedulerCore& core, const FunctionRegistry& registry, const RunOptions& options,
                  std::map<JobId, FunctionData>& results, std::optional<std::string>& collect_error) {
  std::unique_ptr<transport::Network> net;
  if (options.transport == TransportKind::Tcp) net = std::make_unique<transport::TcpNetwork>();
  else net = std::make_unique<transport::InprocNetwork>();

  std::unique_ptr<runtime::WorkerSpawner> spawner;
  runtime::ProcessSpawner* processes = nullptr;
  runtime::ThreadSpawner* threads = nullptr;
  if (options.spawn == SpawnMode::Process) {
    if (options.worker_executable.empty()) fail(ErrorCode::InvalidConfig, "no worker executable given");
    auto p = std::make_unique<runtime::ProcessSpawner>(options.worker_executable);
    processes = p.get();
    spawner = std::move(p);
  } else {
    auto t = std::make_unique<runtime::ThreadSpawner>(*net, registry);
    threads = t.get();
    spawner = std::move(t);
  }

  std::vector<std::unique_ptr<runtime::ThreadedHost>> subs;
  std::map<std::uint32_t, std::string> sub_addresses;
  for (std::uint32_t s = 1; s <= options.cluster.n_subschedulers; ++s) {
    subs.push_back(std::make_unique<runtime::ThreadedHost>(
        *net, std::make_unique<SubSchedulerNode>(s, options.cluster, *spawner)));
    sub_addresses[s] = subs.back()->address();
  }
  runtime::ThreadedHost* collector_host = nullptr;
  auto master = std::make_unique<runtime::ThreadedHost>(
      *net, std::make_unique<MasterNode>(core, sub_addresses, [&collector_host](std::optional<LiveResults> live) {
        auto* host = collector_host;
        auto& collector = static_cast<CollectorNode&>(host->node());
        host->post({}, [&collector, live = std::move(live)] {
          if (live) collector.begin(*live);
          else collector.abort();
        });
      }));
  auto collector = std::make_unique<runtime::ThreadedHost>(
      *net, std::make_unique<CollectorNode>(master->address(), results));
  collector_host = collector.get();

  for (auto& s : subs) s->start();
  collector->start();
  master->start();

  master->join();
  collector->join();
  for (auto& s : subs) s->join();
  if (threads) threads->join_all();
  if (processes && processes->join_all() != 0 && !core.failure()) {
    core.abort({0, ErrorCode::Aborted, "a worker process exited abnormally"});
  }
  collect_error = static_cast<CollectorNode&>(collector->node()).error();
}

}  // namespace

RunResult run_algorithm(const AlgorithmPlan& plan, const FunctionRegistry& registry, std::vector<DataChunk> pool,
                        const RunOptions& options) {
  options.cluster.validate();
  validate_plan(plan);
  check_functions(plan, registry);
  if (options.spawn == SpawnMode::Process && options.transport != TransportKind::Tcp) {
    fail(ErrorCode::InvalidConfig, "worker processes need TCP");
  }
  registry.freeze();

  RunResult result;
  auto t0 = std::chrono::steady_clock::now();
  SchedulerCore core(plan, options.cluster, std::move(pool), {options.retain_all, options.max_segments});
  std::optional<std::string> collect_error;
  if (options.transport == TransportKind::Inproc) {
    run_on_hub(core, registry, options, result.results, collect_error, result.trace);
  } else {
    run_threaded(core, registry, options, result.results, collect_error);
  }
  result.wall_ns =
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();

  if (const auto& f = core.failure()) throw RunFailed(JobId{f->job_id}, f->code, f->message);
  if (collect_error) throw RunFailed(JobId{}, ErrorCode::FetchFailed, *collect_error);

  result.report = core.report();
  result.injections = core.injections();
  result.segment_end_ns = core.segment_end_ns();
  result.segments = core.plan().segments.size();
  result.warnings = core.warnings();
  for (const auto& [id, rec] : core.records()) result.job_segments[id] = rec.segment;
  return result;
}

// ---- report ------------------------------------------------------------------

void write_report(std::ostream& out, const RunResult& r) {
  out << kReportHeader << "\n";
  std::uint64_t bytes_in = 0, bytes_out = 0;
  for (const auto& j : r.report) {
    out << j.job_id << ',' << j.segment << ',' << j.worker << ',' << j.t_start_ns << ',' << j.t_end_ns << ','
        << j.bytes_in << ',' << j.bytes_out << "\n";
    bytes_in += j.bytes_in;
    bytes_out += j.bytes_out;
  }
  out << "# jobs " << r.report.size() << "\n";
  out << "# segments " << r.segments << "\n";
  out << "# injections " << r.injections.size() << "\n";
  out << "# bytes_in " << bytes_in << "\n";
  out << "# bytes_out " << bytes_out << "\n";
  out << "# results " << r.results.size() << "\n";
  out << "# wall_ns " << r.wall_ns << "\n";
  out << "# barriers_ns";
  for (auto t : r.segment_end_ns) out << ' ' << t;
  out << "\n";
}

std::vector<JobReport> parse_report(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) {
    fail(ErrorCode::ValidationError, "report does not start with the expected header");
  }
  std::vector<JobReport> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    auto bad = [&](const std::string& why) {
      fail(ErrorCode::ValidationError, "report line " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() != 7) bad("expected 7 fields, found " + std::to_string(fields.size()));
    auto num = [&](const std::string& s) -> std::int64_t {
      std::size_t used = 0;
      std::int64_t v = 0;
      try {
        v = std::stoll(s, &used);
      } catch (const std::exception&) {
        bad("'" + s + "' is not a number");
      }
      if (used != s.size()) bad("'" + s + "' is not a number");
      return v;
    };
    JobReport j;
    auto id = num(fields[0]), seg = num(fields[1]), worker = num(fields[2]);
    j.t_start_ns = num(fields[3]);
    j.t_end_ns = num(fields[4]);
    auto bin = num(fields[5]), bout = num(fields[6]);
    if (id <= 0) bad("job id must be positive");
    if (seg < 0 || worker <= 0 || bin < 0 || bout < 0) bad("negative or zero field");
    if (j.t_end_ns < j.t_start_ns) bad("job ends before it starts");
    j.job_id = static_cast<std::uint64_t>(id);
    j.segment = static_cast<std::size_t>(seg);
    j.worker = static_cast<std::uint32_t>(worker);
    j.bytes_in = static_cast<std::uint64_t>(bin);
    j.bytes_out = static_cast<std::uint64_t>(bout);
    out.push_back(j);
  }
  return out;
}

}  // namespace hyjob
