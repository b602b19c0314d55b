#include "hyjob/scheduler.hpp"

#include <algorithm>

namespace hyjob {

void ClusterConfig::validate() const {
  if (n_subschedulers == 0 || workers_per_subscheduler == 0 || cores_per_worker == 0) {
    fail(ErrorCode::InvalidConfig, "sub-scheduler, worker and core counts must all be positive");
  }
}

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::Pending: return "Pending";
    case JobState::Dispatched: return "Dispatched";
    case JobState::Done: return "Done";
    case JobState::Failed: return "Failed";
  }
  return "?";
}

// ---- placement ---------------------------------------------------------------

PlacementState::PlacementState(const ClusterConfig& config) : config_(config) { config_.validate(); }

std::uint32_t PlacementState::demand(const JobSpec& job) const {
  return job.threads == 0 ? config_.cores_per_worker : job.threads;
}

Placement PlacementState::place(const JobSpec& job) {
  const std::int64_t d = demand(job);
  std::size_t chosen = remaining_.size();
  for (std::size_t i = 0; i < remaining_.size(); ++i) {
    if (remaining_[i] >= d) {
      chosen = i;
      break;
    }
  }
  if (chosen == remaining_.size()) {
    if (remaining_.size() < config_.total_workers()) {
      remaining_.push_back(config_.cores_per_worker);
    } else {
      // Every worker is open and none fits: share the least loaded one.
      chosen = static_cast<std::size_t>(std::max_element(remaining_.begin(), remaining_.end()) - remaining_.begin());
    }
  }
  remaining_[chosen] -= d;
  auto worker = static_cast<std::uint32_t>(chosen + 1);
  return {config_.sub_of(worker), worker};
}

std::map<JobId, Placement> place_jobs(const SegmentPlan& segment, const ClusterConfig& config) {
  PlacementState state(config);
  std::vector<const JobSpec*> order;
  for (const auto& j : segment.jobs) order.push_back(&j);
  std::stable_sort(order.begin(), order.end(), [&](const JobSpec* a, const JobSpec* b) {
    auto da = state.demand(*a), db = state.demand(*b);
    if (da != db) return da > db;
    return a->id < b->id;
  });
  std::map<JobId, Placement> out;
  for (const auto* j : order) out[j->id] = state.place(*j);
  return out;
}

// ---- SchedulerCore -----------------------------------------------------------

SchedulerCore::SchedulerCore(AlgorithmPlan plan, ClusterConfig config, std::vector<DataChunk> pool,
                             SchedulerOptions options)
    : plan_(std::move(plan)), config_(config), pool_(std::move(pool)), options_(options) {
  config_.validate();
  validate_plan(plan_);
  if (plan_.segments.size() > options_.max_segments) {
    fail(ErrorCode::InvalidConfig, "plan has more segments than the configured maximum");
  }
  for (std::size_t s = 0; s < plan_.segments.size(); ++s) {
    for (const auto& job : plan_.segments[s].jobs) {
      JobRecord rec;
      rec.spec = job;
      rec.segment = s;
      records_.emplace(job.id, std::move(rec));
      next_id_ = std::max(next_id_, job.id.value + 1);
      add_consumer_refs(job.input);
    }
  }
}

void SchedulerCore::set_sub_address(std::uint32_t sub_id, std::string address) {
  sub_addresses_[sub_id] = std::move(address);
}

void SchedulerCore::on_worker_hello(std::uint32_t worker_id, const std::string& address) {
  worker_addresses_[worker_id] = address;
}

void SchedulerCore::add_consumer_refs(const InputBinding& binding) {
  for (auto p : producers_of(binding)) {
    ++refcount_[p];
  }
}

std::string SchedulerCore::holder_address(const ResultLocation& loc) const {
  return loc.address;
}

std::vector<Outgoing> SchedulerCore::start(std::int64_t now_ns) {
  std::vector<Outgoing> out;
  if (started_) return out;
  started_ = true;
  open_segment(out, now_ns);
  return out;
}

void SchedulerCore::open_segment(std::vector<Outgoing>& out, std::int64_t now_ns) {
  while (current_ < plan_.segments.size() && plan_.segments[current_].jobs.empty()) {
    segment_end_ns_.push_back(now_ns);
    ++current_;
  }
  if (current_ >= plan_.segments.size()) {
    finished_ = true;
    return;
  }
  const auto& segment = plan_.segments[current_];
  placement_.emplace(config_);
  // Same packing as place_jobs, kept in placement_ for later injections.
  std::vector<const JobSpec*> order;
  for (const auto& j : segment.jobs) order.push_back(&j);
  std::stable_sort(order.begin(), order.end(), [&](const JobSpec* a, const JobSpec* b) {
    auto da = placement_->demand(*a), db = placement_->demand(*b);
    if (da != db) return da > db;
    return a->id < b->id;
  });
  for (const auto* j : order) records_.at(j->id).placement = placement_->place(*j);

  outstanding_ = segment.jobs.size();
  for (const auto& j : segment.jobs) {
    dispatch_job(records_.at(j.id), out, now_ns);
    if (failure_) return;
  }
}

void SchedulerCore::dispatch_job(JobRecord& rec, std::vector<Outgoing>& out, std::int64_t now_ns) {
  AssignJobMsg a;
  a.job_id = rec.spec.id.value;
  a.function_id = rec.spec.function_id;
  a.threads = rec.spec.threads;
  a.no_send = rec.spec.no_send;
  a.worker_id = rec.placement->worker_id;
  try {
    if (const auto* p = std::get_if<PoolInput>(&rec.spec.input)) {
      a.inline_chunks = pool_.take(p->count).release();
    } else if (const auto* r = std::get_if<RefsInput>(&rec.spec.input)) {
      for (const auto& ref : r->refs) {
        auto it = records_.find(ref.producer);
        if (it == records_.end() || it->second.state != JobState::Done || !it->second.location ||
            it->second.released) {
          fail(ErrorCode::UnresolvedDependency,
               "J" + std::to_string(a.job_id) + " needs R" + std::to_string(ref.producer.value) +
                   ", which is not available");
        }
        const auto& loc = *it->second.location;
        auto range = concrete_range(ref.range, loc.n_chunks);
        a.refs.push_back({ref.producer.value, static_cast<std::uint32_t>(range.start),
                          static_cast<std::uint32_t>(range.end), loc.kind, holder_address(loc)});
      }
    }
  } catch (const Error& e) {
    rec.state = JobState::Failed;
    failure_ = JobFailure{a.job_id, e.code(), e.what()};
    return;
  }
  rec.state = JobState::Dispatched;
  rec.t_start_ns = now_ns;
  out.push_back({rec.placement->sub_id, std::move(a)});
}

std::vector<Outgoing> SchedulerCore::on_job_done(const JobDoneMsg& m, std::uint32_t from_sub,
                                                 std::int64_t now_ns) {
  std::vector<Outgoing> out;
  auto it = records_.find(JobId{m.job_id});
  if (it == records_.end() || it->second.state != JobState::Dispatched) {
    warnings_.push_back("ignoring completion of J" + std::to_string(m.job_id) +
                        (it == records_.end() ? " (unknown job)" : " (state " +
                                                                       std::string(to_string(it->second.state)) + ")"));
    return out;
  }
  auto& rec = it->second;
  rec.state = JobState::Done;
  rec.t_end_ns = now_ns;
  rec.bytes_in = m.bytes_in;
  rec.bytes_out = m.bytes_out;
  ResultLocation loc;
  loc.n_chunks = m.n_chunks;
  if (m.retention == Retention::AtWorker) {
    loc.kind = HolderKind::Worker;
    loc.holder_id = rec.placement->worker_id;
    auto w = worker_addresses_.find(loc.holder_id);
    if (w == worker_addresses_.end()) {
      warnings_.push_back("no address known for worker " + std::to_string(loc.holder_id));
    } else {
      loc.address = w->second;
    }
  } else {
    if (m.retention == Retention::Returned && !m.chunks.empty()) {
      warnings_.push_back("master dropped chunks sent back for J" + std::to_string(m.job_id));
    }
    loc.kind = HolderKind::SubScheduler;
    loc.holder_id = from_sub;
    auto s = sub_addresses_.find(from_sub);
    if (s != sub_addresses_.end()) loc.address = s->second;
  }
  rec.location = std::move(loc);
  for (auto p : producers_of(rec.spec.input)) {
    if (--refcount_[p] == 0) release_candidates_.insert(p);
  }
  if (rec.segment == current_ && --outstanding_ == 0) {
    close_segment(out, now_ns);
  }
  return out;
}

void SchedulerCore::close_segment(std::vector<Outgoing>& out, std::int64_t now_ns) {
  if (!options_.retain_all) {
    // Refcounts of candidates may have grown again through injection.
    std::set<JobId> keep;
    for (auto id : release_candidates_) {
      auto& rec = records_.at(id);
      if (refcount_[id] != 0 || rec.released) continue;
      if (rec.state != JobState::Done) {
        keep.insert(id);
        continue;
      }
      rec.released = true;
      auto sub = rec.location->kind == HolderKind::SubScheduler ? rec.location->holder_id
                                                                 : config_.sub_of(rec.location->holder_id);
      out.push_back({sub, ReleaseMsg{id.value}});
    }
    release_candidates_ = std::move(keep);
  }
  segment_end_ns_.push_back(now_ns);
  ++current_;
  open_segment(out, now_ns);
}

void SchedulerCore::on_job_failed(const JobFailedMsg& m) {
  auto it = records_.find(JobId{m.job_id});
  if (it != records_.end()) it->second.state = JobState::Failed;
  if (!failure_) {
    auto code = m.code >= 1 && m.code <= static_cast<std::uint32_t>(ErrorCode::Aborted)
                    ? static_cast<ErrorCode>(m.code)
                    : ErrorCode::RunFailed;
    failure_ = JobFailure{m.job_id, code, m.message};
  }
}

void SchedulerCore::abort(JobFailure f) {
  if (!failure_) failure_ = std::move(f);
}

InjectionMapping SchedulerCore::inject(std::uint64_t origin, const InjectionRequest& request,
                                       std::vector<Outgoing>& out, std::int64_t now_ns) {
  auto oit = records_.find(JobId{origin});
  if (oit == records_.end() || oit->second.state != JobState::Dispatched) {
    fail(ErrorCode::InvalidTarget, "injecting job J" + std::to_string(origin) + " is not running");
  }
  if (request.specs.empty()) return {};

  std::size_t base = 0;
  switch (request.target) {
    case InjectionTarget::CurrentSegment: base = current_; break;
    case InjectionTarget::FollowingSegment:
      if (request.offset == 0) fail(ErrorCode::InvalidTarget, "following-segment offset must be at least 1");
      base = current_ + request.offset;
      break;
    case InjectionTarget::AppendSegment: base = std::max(plan_.segments.size(), current_ + 1); break;
  }

  std::map<std::uint64_t, std::size_t> placeholder_segment;
  for (const auto& t : request.specs) {
    auto seg = base + t.segment_delta;
    if (seg >= options_.max_segments) {
      fail(ErrorCode::InvalidTarget, "injection would exceed the limit of " +
                                         std::to_string(options_.max_segments) + " segments");
    }
    if (!placeholder_segment.emplace(t.placeholder, seg).second) {
      fail(ErrorCode::InvalidRef, "placeholder " + std::to_string(t.placeholder) + " used twice");
    }
  }
  for (const auto& t : request.specs) {
    auto seg = base + t.segment_delta;
    if (const auto* p = std::get_if<PoolInput>(&t.input); p && p->count == 0) {
      fail(ErrorCode::InvalidRef, "pool binding of zero chunks");
    }
    const auto* refs = std::get_if<TemplateRefs>(&t.input);
    if (!refs) continue;
    for (const auto& r : refs->refs) {
      if (r.range && r.range->end < r.range->start) fail(ErrorCode::InvalidRef, "inverted chunk range");
      if (r.placeholder) {
        auto ph = placeholder_segment.find(r.producer);
        if (ph == placeholder_segment.end()) {
          fail(ErrorCode::InvalidRef, "unknown placeholder " + std::to_string(r.producer));
        }
        if (ph->second >= seg) {
          fail(ErrorCode::InvalidRef, "placeholder " + std::to_string(r.producer) + " is not in an earlier segment");
        }
        continue;
      }
      auto pit = records_.find(JobId{r.producer});
      if (pit == records_.end()) fail(ErrorCode::InvalidRef, "unknown producer R" + std::to_string(r.producer));
      if (pit->second.segment >= seg) {
        fail(ErrorCode::InvalidRef, "R" + std::to_string(r.producer) + " is not in an earlier segment");
      }
      if (pit->second.released) {
        fail(ErrorCode::InvalidRef, "R" + std::to_string(r.producer) + " has already been released");
      }
    }
  }

  InjectionMapping mapping;
  for (const auto& t : request.specs) mapping[t.placeholder] = JobId{next_id_++};

  InjectionRecord log{origin, current_, {}};
  std::vector<JobId> dispatch_now;
  for (const auto& t : request.specs) {
    JobSpec spec;
    spec.id = mapping.at(t.placeholder);
    spec.function_id = t.function_id;
    spec.threads = t.threads;
    spec.no_send = t.no_send;
    if (const auto* p = std::get_if<PoolInput>(&t.input)) {
      spec.input = *p;
    } else if (const auto* refs = std::get_if<TemplateRefs>(&t.input)) {
      RefsInput ri;
      for (const auto& r : refs->refs) {
        ri.refs.push_back({r.placeholder ? mapping.at(r.producer) : JobId{r.producer}, r.range});
      }
      spec.input = std::move(ri);
    }
    auto seg = base + t.segment_delta;
    if (plan_.segments.size() <= seg) plan_.segments.resize(seg + 1);
    plan_.segments[seg].jobs.push_back(spec);
    add_consumer_refs(spec.input);
    JobRecord rec;
    rec.spec = spec;
    rec.segment = seg;
    rec.injected = true;
    records_.emplace(spec.id, std::move(rec));
    log.assigned.push_back(spec.id.value);
    if (seg == current_) dispatch_now.push_back(spec.id);
  }
  injections_.push_back(std::move(log));

  for (auto id : dispatch_now) {
    auto& rec = records_.at(id);
    rec.placement = placement_->place(rec.spec);
    ++outstanding_;
    dispatch_job(rec, out, now_ns);
    if (failure_) break;
  }
  return mapping;
}

std::vector<std::pair<JobId, ResultLocation>> SchedulerCore::live_results() const {
  std::vector<std::pair<JobId, ResultLocation>> out;
  for (const auto& [id, rec] : records_) {
    if (rec.state == JobState::Done && !rec.released) out.emplace_back(id, *rec.location);
  }
  return out;
}

std::vector<JobReport> SchedulerCore::report() const {
  std::vector<JobReport> out;
  for (const auto& [id, rec] : records_) {
    if (rec.state != JobState::Done) continue;
    out.push_back({id.value, rec.segment, rec.placement ? rec.placement->worker_id : 0, rec.t_start_ns,
                   rec.t_end_ns, rec.bytes_in, rec.bytes_out});
  }
  return out;
}

std::set<JobId> SchedulerCore::released() const {
  std::set<JobId> out;
  for (const auto& [id, rec] : records_) {
    if (rec.released) out.insert(id);
  }
  return out;
}

}  // namespace hyjob
