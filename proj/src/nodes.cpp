#include "hyjob/nodes.hpp"

#include <iostream>

namespace hyjob::runtime {

// ---- MasterNode --------------------------------------------------------------

MasterNode::MasterNode(SchedulerCore& core, std::map<std::uint32_t, std::string> sub_addresses,
                       std::function<void(std::optional<LiveResults>)> on_done)
    : core_(core), sub_addresses_(std::move(sub_addresses)), on_done_(std::move(on_done)) {}

std::int64_t MasterNode::now() const {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0_).count();
}

void MasterNode::start(NodeHost& host) {
  host_ = &host;
  t0_ = std::chrono::steady_clock::now();
  for (const auto& [sub, address] : sub_addresses_) {
    auto peer = host.connect(address);
    subs_[sub] = peer;
    sub_of_peer_[peer] = sub;
    core_.set_sub_address(sub, address);
    host.send(peer, HelloMsg{0, 0, kProtocolVersion, host.address()});
  }
  deliver(core_.start(now()));
  settle();
}

void MasterNode::deliver(std::vector<Outgoing> out) {
  for (auto& o : out) {
    auto it = subs_.find(o.sub_id);
    if (it == subs_.end()) {
      core_.abort({0, ErrorCode::InvalidConfig, "no sub-scheduler " + std::to_string(o.sub_id)});
      return;
    }
    host_->send(it->second, std::move(o.msg));
  }
}

void MasterNode::on_message(PeerId from, Message msg) {
  if (down_) return;
  std::visit(
      [&](auto&& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, HelloMsg>) {
          core_.on_worker_hello(m.worker_id, m.address);
        } else if constexpr (std::is_same_v<T, JobDoneMsg>) {
          auto sub = sub_of_peer_.find(from);
          if (sub == sub_of_peer_.end()) return;
          deliver(core_.on_job_done(m, sub->second, now()));
        } else if constexpr (std::is_same_v<T, JobFailedMsg>) {
          core_.on_job_failed(m);
        } else if constexpr (std::is_same_v<T, InjectMsg>) {
          std::vector<Outgoing> out;
          try {
            auto mapping = core_.inject(m.origin, m.request, out, now());
            InjectAckMsg ack;
            for (const auto& [placeholder, id] : mapping) ack.mapping.emplace_back(placeholder, id.value);
            host_->send(from, std::move(ack));
          } catch (const Error& e) {
            core_.abort({m.origin, e.code(), e.what()});
          }
          deliver(std::move(out));
        } else if constexpr (std::is_same_v<T, ShutdownMsg>) {
          shutdown_cluster();
          return;
        } else {
          std::cerr << "master: ignoring " << describe(m) << "\n";
        }
      },
      std::move(msg));
  settle();
}

void MasterNode::on_peer_closed(PeerId peer) {
  if (down_ || !sub_of_peer_.count(peer)) return;
  core_.abort({0, ErrorCode::PeerClosed, "sub-scheduler " + std::to_string(sub_of_peer_[peer]) + " went away"});
  settle();
}

void MasterNode::settle() {
  if (announced_ || down_) return;
  if (core_.failure()) {
    announced_ = true;
    if (on_done_) on_done_(std::nullopt);
    shutdown_cluster();
  } else if (core_.finished()) {
    announced_ = true;
    if (on_done_) on_done_(core_.live_results());
  }
}

void MasterNode::shutdown_cluster() {
  if (down_) return;
  down_ = true;
  for (const auto& [sub, peer] : subs_) host_->send(peer, ShutdownMsg{});
  host_->stop();
}

// ---- SubSchedulerNode --------------------------------------------------------

SubSchedulerNode::SubSchedulerNode(std::uint32_t sub_id, const ClusterConfig& config, WorkerSpawner& spawner)
    : sub_id_(sub_id), config_(config), spawner_(spawner) {}

void SubSchedulerNode::start(NodeHost& host) { host_ = &host; }

void SubSchedulerNode::on_message(PeerId from, Message msg) {
  if (down_) return;
  std::visit(
      [&](auto&& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, HelloMsg>) {
          on_hello(from, m);
        } else if constexpr (std::is_same_v<T, AssignJobMsg>) {
          on_assign(std::move(m));
        } else if constexpr (std::is_same_v<T, JobDoneMsg>) {
          on_job_done(std::move(m));
        } else if constexpr (std::is_same_v<T, JobFailedMsg>) {
          if (master_) host_->send(*master_, std::move(m));
        } else if constexpr (std::is_same_v<T, FetchMsg>) {
          on_fetch(from, m);
        } else if constexpr (std::is_same_v<T, ReleaseMsg>) {
          on_release(m);
        } else if constexpr (std::is_same_v<T, InjectMsg>) {
          inject_routes_.push_back(from);
          if (master_) host_->send(*master_, std::move(m));
        } else if constexpr (std::is_same_v<T, InjectAckMsg>) {
          if (inject_routes_.empty()) return;
          auto to = inject_routes_.front();
          inject_routes_.pop_front();
          host_->send(to, std::move(m));
        } else if constexpr (std::is_same_v<T, ShutdownMsg>) {
          shutdown();
        } else {
          std::cerr << "sub-scheduler " << sub_id_ << ": ignoring " << describe(m) << "\n";
        }
      },
      std::move(msg));
}

void SubSchedulerNode::on_peer_closed(PeerId peer) {
  if (master_ && peer == *master_) shutdown();
}

void SubSchedulerNode::on_hello(PeerId from, const HelloMsg& m) {
  if (m.worker_id == 0) {
    master_ = from;
    return;
  }
  if (m.version != kProtocolVersion) {
    std::cerr << "sub-scheduler " << sub_id_ << ": worker " << m.worker_id << " speaks protocol "
              << int(m.version) << "\n";
  }
  workers_[m.worker_id] = from;
  if (master_) host_->send(*master_, m);
  auto it = waiting_.find(m.worker_id);
  if (it == waiting_.end()) return;
  for (auto& a : it->second) host_->send(from, std::move(a));
  waiting_.erase(it);
}

void SubSchedulerNode::on_assign(AssignJobMsg m) {
  auto w = m.worker_id;
  job_worker_[m.job_id] = w;
  auto it = workers_.find(w);
  if (it != workers_.end()) {
    host_->send(it->second, std::move(m));
    return;
  }
  waiting_[w].push_back(std::move(m));
  if (spawned_.insert(w).second) spawner_.spawn(w, config_.cores_per_worker, host_->address());
}

void SubSchedulerNode::on_job_done(JobDoneMsg m) {
  if (m.retention == Retention::Returned) {
    store_[m.job_id] = std::move(m.chunks);
    m.chunks.clear();
    m.retention = Retention::AtSubScheduler;
  }
  if (master_) host_->send(*master_, std::move(m));
}

void SubSchedulerNode::on_fetch(PeerId from, const FetchMsg& m) {
  auto it = store_.find(m.producer);
  if (it == store_.end()) {
    host_->send(from, JobFailedMsg{m.producer, static_cast<std::uint32_t>(ErrorCode::NotRetained),
                                   "sub-scheduler " + std::to_string(sub_id_) + " does not hold R" +
                                       std::to_string(m.producer)});
    return;
  }
  const auto& chunks = it->second;
  if (m.start > m.end || m.end > chunks.size()) {
    host_->send(from, JobFailedMsg{m.producer, static_cast<std::uint32_t>(ErrorCode::RangeOutOfBounds),
                                   "range exceeds R" + std::to_string(m.producer)});
    return;
  }
  host_->send(from, ChunksMsg{m.producer, {chunks.begin() + m.start, chunks.begin() + m.end}});
}

void SubSchedulerNode::on_release(const ReleaseMsg& m) {
  if (store_.erase(m.producer)) return;
  auto holder = job_worker_.find(m.producer);
  if (holder == job_worker_.end()) return;
  auto peer = workers_.find(holder->second);
  if (peer != workers_.end()) host_->send(peer->second, m);
}

void SubSchedulerNode::shutdown() {
  if (down_) return;
  down_ = true;
  for (const auto& [w, peer] : workers_) host_->send(peer, ShutdownMsg{});
  host_->stop();
}

// ---- CollectorNode -----------------------------------------------------------

CollectorNode::CollectorNode(std::string master_address, std::map<JobId, FunctionData>& results)
    : master_address_(std::move(master_address)), results_(results) {}

void CollectorNode::start(NodeHost& host) {
  host_ = &host;
  master_ = host.connect(master_address_);
}

void CollectorNode::begin(const LiveResults& live) {
  for (const auto& [id, loc] : live) {
    if (loc.n_chunks == 0) {
      results_[id] = FunctionData{};
      continue;
    }
    auto it = peers_.find(loc.address);
    if (it == peers_.end()) it = peers_.emplace(loc.address, host_->connect(loc.address)).first;
    waits_[it->second].push_back(id);
    ++outstanding_;
    host_->send(it->second, FetchMsg{id.value, 0, static_cast<std::uint32_t>(loc.n_chunks)});
  }
  if (outstanding_ == 0) finish();
}

void CollectorNode::abort() {
  done_ = true;
  host_->stop();
}

void CollectorNode::on_message(PeerId from, Message msg) {
  if (done_) return;
  auto& waits = waits_[from];
  if (auto* c = std::get_if<ChunksMsg>(&msg)) {
    if (waits.empty()) return;
    results_[waits.front()] = FunctionData(std::move(c->chunks));
    waits.pop_front();
  } else if (auto* f = std::get_if<JobFailedMsg>(&msg)) {
    if (waits.empty()) return;
    if (!error_) error_ = "collecting R" + std::to_string(f->job_id) + ": " + f->message;
    waits.pop_front();
  } else {
    return;
  }
  if (--outstanding_ == 0) finish();
}

void CollectorNode::on_peer_closed(PeerId peer) {
  if (done_ || waits_[peer].empty()) return;
  if (!error_) error_ = "a result holder went away during collection";
  outstanding_ -= waits_[peer].size();
  waits_[peer].clear();
  if (outstanding_ == 0) finish();
}

void CollectorNode::finish() {
  done_ = true;
  host_->send(master_, ShutdownMsg{});
  host_->stop();
}

}  // namespace hyjob::runtime
