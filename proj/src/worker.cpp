#include "hyjob/worker.hpp"

#include <iostream>

namespace hyjob {

// ---- WorkerState -------------------------------------------------------------

void WorkerState::begin(JobId job) {
  if (retained_.count(job)) fail(ErrorCode::ValidationError, "job already has retained results here");
  active_.insert(job);
}

JobOutcome WorkerState::finish(JobId job, bool no_send, FunctionData output, std::uint64_t bytes_in) {
  active_.erase(job);
  JobOutcome out;
  out.job = job;
  out.n_chunks = output.size();
  out.bytes_in = bytes_in;
  out.bytes_out = output.payload_bytes();
  out.retained = no_send;
  if (no_send) {
    retained_[job] = std::move(output);
  } else {
    out.chunks = std::move(output);
  }
  return out;
}

FunctionData WorkerState::serve_fetch(JobId producer, ChunkRange range) const {
  auto it = retained_.find(producer);
  if (it == retained_.end()) {
    fail(ErrorCode::NotRetained, "worker " + std::to_string(worker_id_) + " does not retain R" +
                                     std::to_string(producer.value));
  }
  return it->second.slice(range.start, range.end);
}

// ---- sequence execution ------------------------------------------------------

namespace {

class SequenceContext final : public JobContext {
 public:
  SequenceContext(JobRun& run, std::size_t index, const InjectHook& hook)
      : run_(run), index_(index), hook_(hook) {}
  JobId job_id() const override { return run_.id; }
  std::size_t sequence_index() const override { return index_; }
  std::size_t sequence_count() const override { return run_.slices.size(); }
  InjectionMapping inject(const InjectionRequest& request) override {
    if (!hook_) fail(ErrorCode::InvalidTarget, "job injection is not available here");
    return hook_(run_, index_, request);
  }

 private:
  JobRun& run_;
  std::size_t index_;
  const InjectHook& hook_;
};

}  // namespace

FunctionData JobRun::collect() const {
  for (const auto& e : errors) {
    if (e) throw *e;
  }
  std::map<std::size_t, FunctionData> per_sequence;
  for (std::size_t i = 0; i < outputs.size(); ++i) per_sequence.emplace(i, outputs[i]);
  return assemble_outputs(per_sequence);
}

std::shared_ptr<JobRun> prepare_job_run(const JobAssignment& a, FunctionData input, std::uint32_t cores) {
  auto run = std::make_shared<JobRun>();
  run->id = JobId{a.job_id};
  run->function_id = a.function_id;
  run->no_send = a.no_send;
  run->bytes_in = input.payload_bytes();
  auto sequences = effective_sequences(a.threads, cores, input.size());
  run->slices = partition_chunks(input.size(), sequences);
  run->input = std::move(input);
  run->outputs.resize(run->slices.size());
  run->errors.resize(run->slices.size());
  run->remaining.store(run->slices.size());
  return run;
}

void launch_job_run(const std::shared_ptr<JobRun>& run, const FunctionRegistry& registry, ThreadPool& pool,
                    InjectHook inject, std::function<void(const std::shared_ptr<JobRun>&)> on_last,
                    std::function<void()> after_sequence) {
  auto shared_inject = std::make_shared<InjectHook>(std::move(inject));
  auto shared_last = std::make_shared<std::function<void(const std::shared_ptr<JobRun>&)>>(std::move(on_last));
  auto shared_after = std::make_shared<std::function<void()>>(std::move(after_sequence));
  for (std::size_t s = 0; s < run->slices.size(); ++s) {
    pool.submit([run, s, &registry, shared_inject, shared_last, shared_after] {
      const auto& slice = run->slices[s].chunk_slice;
      try {
        SequenceContext ctx(*run, s, *shared_inject);
        run->outputs[s] = registry.invoke(run->function_id, run->input.slice(slice.start, slice.end), ctx);
      } catch (const Error& e) {
        run->errors[s] = e;
      } catch (const std::exception& e) {
        run->errors[s] = Error(ErrorCode::UserFunctionPanic, e.what());
      }
      if (run->remaining.fetch_sub(1) == 1 && *shared_last) (*shared_last)(run);
      if (*shared_after) (*shared_after)();
    });
  }
}

JobOutcome execute_job(WorkerState& state, const FunctionRegistry& registry, ThreadPool& pool,
                       const JobAssignment& a,
                       const std::function<FunctionData(const LocatedRef&)>& fetch, InjectHook inject) {
  if (!registry.contains(a.function_id)) {
    fail(ErrorCode::UnknownFunction, "no function with id " + std::to_string(a.function_id));
  }
  FunctionData input(a.inline_chunks);
  for (const auto& ref : a.refs) {
    try {
      input.append(fetch(ref));
    } catch (const Error& e) {
      fail(ErrorCode::FetchFailed, "fetching R" + std::to_string(ref.producer) + ": " + e.what());
    }
  }
  JobId id{a.job_id};
  state.begin(id);
  auto run = prepare_job_run(a, std::move(input), state.cores());
  std::promise<void> done;
  auto finished = done.get_future();
  launch_job_run(run, registry, pool, std::move(inject),
                 [&done](const std::shared_ptr<JobRun>&) { done.set_value(); });
  finished.wait();
  FunctionData output;
  try {
    output = run->collect();
  } catch (...) {
    state.abandon(id);
    throw;
  }
  return state.finish(id, a.no_send, std::move(output), run->bytes_in);
}

// ---- WorkerNode --------------------------------------------------------------

namespace runtime {

WorkerNode::WorkerNode(std::uint32_t worker_id, std::uint32_t cores, std::string sub_address,
                       const FunctionRegistry& registry)
    : state_(worker_id, cores), sub_address_(std::move(sub_address)), registry_(registry) {}

WorkerNode::~WorkerNode() {
  // Unblock sequences waiting on injection acks, then let the lanes drain.
  {
    std::lock_guard lock(all_waits_mu_);
    for (auto& weak : all_waits_) {
      if (auto w = weak.lock()) {
        try {
          w->set_exception(std::make_exception_ptr(Error(ErrorCode::Aborted, "worker shut down")));
        } catch (const std::future_error&) {
        }
      }
    }
  }
  inject_waits_.clear();
  pool_.reset();
}

void WorkerNode::start(NodeHost& host) {
  host_ = &host;
  pool_ = std::make_unique<ThreadPool>(state_.cores());
  sub_ = host.connect(sub_address_);
  peers_[sub_address_] = sub_;
  host.send(sub_, HelloMsg{state_.worker_id(), state_.cores(), kProtocolVersion, host.address()});
}

PeerId WorkerNode::peer_for(const std::string& address) {
  auto it = peers_.find(address);
  if (it != peers_.end()) return it->second;
  auto peer = host_->connect(address);
  peers_[address] = peer;
  return peer;
}

void WorkerNode::on_message(PeerId from, Message msg) {
  if (stopping_) return;
  std::visit(
      [&](auto&& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, AssignJobMsg>) {
          on_assign(std::move(m));
        } else if constexpr (std::is_same_v<T, ChunksMsg>) {
          on_chunks(from, std::move(m));
        } else if constexpr (std::is_same_v<T, JobFailedMsg>) {
          on_fetch_error(from, m);
        } else if constexpr (std::is_same_v<T, FetchMsg>) {
          on_fetch(from, m);
        } else if constexpr (std::is_same_v<T, ReleaseMsg>) {
          state_.release(JobId{m.producer});
        } else if constexpr (std::is_same_v<T, InjectAckMsg>) {
          on_inject_ack(m);
        } else if constexpr (std::is_same_v<T, ShutdownMsg>) {
          shutdown();
        } else {
          std::cerr << "worker " << state_.worker_id() << ": ignoring " << describe(m) << "\n";
        }
      },
      std::move(msg));
}

void WorkerNode::on_peer_closed(PeerId peer) {
  if (peer == sub_ && !stopping_) shutdown();
}

void WorkerNode::on_assign(JobAssignment a) {
  auto job = a.job_id;
  if (!registry_.contains(a.function_id)) {
    host_->send(sub_, JobFailedMsg{job, static_cast<std::uint32_t>(ErrorCode::UnknownFunction),
                                   "no function with id " + std::to_string(a.function_id)});
    return;
  }
  auto& p = pending_[job];
  p.slots.resize(a.refs.size());
  p.missing = a.refs.size();
  for (std::size_t i = 0; i < a.refs.size(); ++i) {
    const auto& ref = a.refs[i];
    if (ref.holder_addr == host_->address()) {
      try {
        p.slots[i] = state_.serve_fetch(JobId{ref.producer}, {ref.start, ref.end});
        --p.missing;
      } catch (const Error& e) {
        p.assignment = std::move(a);
        fail_job(job, ErrorCode::FetchFailed, e.what());
        return;
      }
      continue;
    }
    auto peer = peer_for(ref.holder_addr);
    fetch_waits_[peer].push_back({job, i});
    host_->send(peer, FetchMsg{ref.producer, ref.start, ref.end});
  }
  p.assignment = std::move(a);
  try_launch(job);
}

void WorkerNode::on_chunks(PeerId from, ChunksMsg m) {
  auto& waits = fetch_waits_[from];
  if (waits.empty()) return;
  auto w = waits.front();
  waits.pop_front();
  auto it = pending_.find(w.job);
  if (it == pending_.end() || it->second.failed) return;
  it->second.slots[w.slot] = FunctionData(std::move(m.chunks));
  --it->second.missing;
  try_launch(w.job);
}

void WorkerNode::on_fetch_error(PeerId from, const JobFailedMsg& m) {
  auto& waits = fetch_waits_[from];
  if (waits.empty()) return;
  auto w = waits.front();
  waits.pop_front();
  fail_job(w.job, ErrorCode::FetchFailed, "fetching R" + std::to_string(m.job_id) + ": " + m.message);
}

void WorkerNode::on_fetch(PeerId from, const FetchMsg& m) {
  try {
    auto data = state_.serve_fetch(JobId{m.producer}, {m.start, m.end});
    host_->send(from, ChunksMsg{m.producer, std::move(data).release()});
  } catch (const Error& e) {
    host_->send(from, JobFailedMsg{m.producer, static_cast<std::uint32_t>(e.code()), e.what()});
  }
}

void WorkerNode::fail_job(std::uint64_t job, ErrorCode code, const std::string& why) {
  auto it = pending_.find(job);
  if (it != pending_.end()) {
    if (it->second.failed) return;
    it->second.failed = true;
    // Outstanding fetch replies still arrive; keep the entry until then.
    if (it->second.missing == 0) pending_.erase(it);
  }
  host_->send(sub_, JobFailedMsg{job, static_cast<std::uint32_t>(code), why});
}

void WorkerNode::try_launch(std::uint64_t job) {
  auto it = pending_.find(job);
  if (it == pending_.end() || it->second.missing != 0) return;
  if (it->second.failed) {
    pending_.erase(it);
    return;
  }
  auto p = std::move(it->second);
  pending_.erase(it);
  FunctionData input(std::move(p.assignment.inline_chunks));
  for (auto& slot : p.slots) input.append(*slot);
  try {
    state_.begin(JobId{job});
  } catch (const Error& e) {
    host_->send(sub_, JobFailedMsg{job, static_cast<std::uint32_t>(e.code()), e.what()});
    return;
  }
  auto run = prepare_job_run(p.assignment, std::move(input), state_.cores());
  run->launch_no = ++launches_;
  host_->activity(static_cast<int>(run->slices.size()));
  NodeHost* host = host_;
  launch_job_run(
      run, registry_, *pool_,
      [this](JobRun& r, std::size_t s, const InjectionRequest& req) { return inject_from_sequence(r, s, req); },
      [this, host](const std::shared_ptr<JobRun>& r) {
        host->post({r->launch_no, 0, 0}, [this, r] { complete(r); });
      },
      [host] { host->activity(-1); });
}

void WorkerNode::complete(const std::shared_ptr<JobRun>& run) {
  if (stopping_) return;
  FunctionData output;
  try {
    output = run->collect();
  } catch (const Error& e) {
    state_.abandon(run->id);
    host_->send(sub_, JobFailedMsg{run->id.value, static_cast<std::uint32_t>(e.code()), e.what()});
    return;
  }
  auto outcome = state_.finish(run->id, run->no_send, std::move(output), run->bytes_in);
  JobDoneMsg done;
  done.job_id = run->id.value;
  done.retention = outcome.retained ? Retention::AtWorker : Retention::Returned;
  done.n_chunks = static_cast<std::uint32_t>(outcome.n_chunks);
  done.chunks = std::move(outcome.chunks).release();
  done.bytes_in = outcome.bytes_in;
  done.bytes_out = outcome.bytes_out;
  host_->send(sub_, std::move(done));
}

InjectionMapping WorkerNode::inject_from_sequence(JobRun& run, std::size_t sequence,
                                                  const InjectionRequest& req) {
  auto waiter = std::make_shared<std::promise<InjectionMapping>>();
  auto result = waiter->get_future();
  auto origin = run.id.value;
  {
    std::lock_guard lock(all_waits_mu_);
    if (all_waits_.size() >= 64) {
      std::erase_if(all_waits_, [](const auto& w) { return w.expired(); });
    }
    all_waits_.push_back(waiter);
  }
  host_->post({run.launch_no, sequence + 1, ++inject_events_}, [this, waiter, origin, req] {
    if (stopping_) {
      host_->activity(1);
      waiter->set_exception(std::make_exception_ptr(Error(ErrorCode::Aborted, "worker shut down")));
      return;
    }
    inject_waits_.push_back(waiter);
    host_->send(sub_, InjectMsg{origin, req});
  });
  host_->activity(-1);
  return result.get();
}

void WorkerNode::on_inject_ack(const InjectAckMsg& m) {
  if (inject_waits_.empty()) return;
  auto waiter = inject_waits_.front();
  inject_waits_.pop_front();
  InjectionMapping mapping;
  for (const auto& [placeholder, assigned] : m.mapping) mapping[placeholder] = JobId{assigned};
  host_->activity(1);
  waiter->set_value(std::move(mapping));
}

void WorkerNode::shutdown() {
  stopping_ = true;
  for (auto& w : inject_waits_) {
    host_->activity(1);
    try {
      w->set_exception(std::make_exception_ptr(Error(ErrorCode::Aborted, "worker shut down")));
    } catch (const std::future_error&) {
    }
  }
  inject_waits_.clear();
  host_->stop();
}

}  // namespace runtime
}  // namespace hyjob
