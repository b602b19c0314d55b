#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hyjob/node.hpp"
#include "hyjob/scheduler.hpp"

namespace hyjob::runtime {

using LiveResults = std::vector<std::pair<JobId, ResultLocation>>;

/// Drives a SchedulerCore over the protocol. Reports the live results (or
/// nullopt after a failure) through `on_done` once the plan is exhausted,
/// then waits for SHUTDOWN and fans it out to the sub-schedulers.
class MasterNode final : public Node {
 public:
  MasterNode(SchedulerCore& core, std::map<std::uint32_t, std::string> sub_addresses,
             std::function<void(std::optional<LiveResults>)> on_done);

  void start(NodeHost& host) override;
  void on_message(PeerId from, Message msg) override;
  void on_peer_closed(PeerId peer) override;

 private:
  std::int64_t now() const;
  void deliver(std::vector<Outgoing> out);
  void settle();
  void shutdown_cluster();

  SchedulerCore& core_;
  std::map<std::uint32_t, std::string> sub_addresses_;
  std::function<void(std::optional<LiveResults>)> on_done_;
  NodeHost* host_ = nullptr;
  std::map<std::uint32_t, PeerId> subs_;
  std::map<PeerId, std::uint32_t> sub_of_peer_;
  std::chrono::steady_clock::time_point t0_;
  bool announced_ = false;
  bool down_ = false;
};

/// Owns a fixed share of workers: spawns them on first use, forwards
/// assignments, stores results sent back to it, and relays everything
/// else between workers and the master.
class SubSchedulerNode final : public Node {
 public:
  SubSchedulerNode(std::uint32_t sub_id, const ClusterConfig& config, WorkerSpawner& spawner);

  void start(NodeHost& host) override;
  void on_message(PeerId from, Message msg) override;
  void on_peer_closed(PeerId peer) override;

  std::size_t stored_count() const { return store_.size(); }

 private:
  void on_hello(PeerId from, const HelloMsg& m);
  void on_assign(AssignJobMsg m);
  void on_job_done(JobDoneMsg m);
  void on_fetch(PeerId from, const FetchMsg& m);
  void on_release(const ReleaseMsg& m);
  void shutdown();

  std::uint32_t sub_id_;
  ClusterConfig config_;
  WorkerSpawner& spawner_;
  NodeHost* host_ = nullptr;
  std::optional<PeerId> master_;
  std::map<std::uint32_t, PeerId> workers_;
  std::set<std::uint32_t> spawned_;
  std::map<std::uint32_t, std::vector<AssignJobMsg>> waiting_;  // until the worker says HELLO
  std::map<std::uint64_t, std::uint32_t> job_worker_;
  std::map<std::uint64_t, std::vector<DataChunk>> store_;
  std::deque<PeerId> inject_routes_;
  bool down_ = false;
};

/// Pulls the live results from wherever they are held, then ends the run
/// by sending SHUTDOWN to the master.
class CollectorNode final : public Node {
 public:
  CollectorNode(std::string master_address, std::map<JobId, FunctionData>& results);

  void start(NodeHost& host) override;
  void on_message(PeerId from, Message msg) override;
  void on_peer_closed(PeerId peer) override;

  /// Both run on the collector's control loop (via NodeHost::post).
  void begin(const LiveResults& live);
  void abort();

  const std::optional<std::string>& error() const { return error_; }
  bool done() const { return done_; }

 private:
  void finish();

  std::string master_address_;
  std::map<JobId, FunctionData>& results_;
  NodeHost* host_ = nullptr;
  PeerId master_ = 0;
  std::map<std::string, PeerId> peers_;
  std::map<PeerId, std::deque<JobId>> waits_;
  std::size_t outstanding_ = 0;
  std::optional<std::string> error_;
  bool done_ = false;
};

}  // namespace hyjob::runtime
