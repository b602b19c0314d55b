#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>

#include "hyjob/message.hpp"

namespace hyjob::runtime {

/// Opaque handle of a connected peer, valid within one node.
using PeerId = std::uint64_t;

/// Orders events posted by a node's own threads. Deterministic hosts run
/// simultaneously pending events in ascending key order.
using EventKey = std::array<std::uint64_t, 3>;

/// What a runtime provides to the actor it hosts. Everything except post()
/// and activity() is called from the node's control loop only.
class NodeHost {
 public:
  virtual ~NodeHost() = default;
  virtual const std::string& address() const = 0;
  virtual PeerId connect(const std::string& address) = 0;
  virtual void send(PeerId to, Message m) = 0;
  /// Thread-safe: queue `fn` to run on the control loop.
  virtual void post(EventKey key, std::function<void()> fn) = 0;
  /// Thread-safe quiescence accounting: +n when n units of background work
  /// start or resume, -1 when one finishes or blocks on the control loop.
  virtual void activity(int delta) = 0;
  /// Ends the control loop after the current handler.
  virtual void stop() = 0;
};

/// An actor driven by one control loop: handlers run to completion, one
/// message at a time.
class Node {
 public:
  virtual ~Node() = default;
  virtual void start(NodeHost& host) = 0;
  virtual void on_message(PeerId from, Message msg) = 0;
  virtual void on_peer_closed(PeerId) {}
};

/// Brings up a worker that will connect to `sub_address`.
class WorkerSpawner {
 public:
  virtual ~WorkerSpawner() = default;
  virtual void spawn(std::uint32_t worker_id, std::uint32_t cores, const std::string& sub_address) = 0;
};

}  // namespace hyjob::runtime
