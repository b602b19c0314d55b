#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "hyjob/node.hpp"

namespace hyjob::runtime {

/// One delivered message.
struct TraceEntry {
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  Tag tag = Tag::Hello;
  std::uint64_t subject = 0;  // job / producer / worker id the message is about
  std::uint64_t digest = 0;   // FNV-1a of the encoded frame
  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

/// Id a message is about: the job for job messages, the producer for data
/// messages, the worker for HELLO.
std::uint64_t subject_of(const Message& m);
std::uint64_t frame_digest(const Message& m);

/// Runs every node of a run on the calling thread with a seeded, totally
/// ordered delivery: each step picks uniformly among links with pending
/// messages (FIFO within a link). Work the nodes hand to their own threads
/// is awaited before their posted events run, in (node, key) order, so
/// the trace depends only on the seed and the plan.
class InprocHub {
 public:
  explicit InprocHub(std::uint64_t seed, bool record_trace = true);
  ~InprocHub();

  InprocHub(const InprocHub&) = delete;
  InprocHub& operator=(const InprocHub&) = delete;

  /// Registers a node; it starts when run() begins, or at once if added
  /// while running. Returns its index.
  std::uint32_t add(std::unique_ptr<Node> node);
  static std::string address_of(std::uint32_t index);
  NodeHost& host(std::uint32_t index);
  Node& node(std::uint32_t index);
  std::size_t size() const { return slots_.size(); }

  /// Runs until no message, background work or posted event remains.
  void run();

  const std::vector<TraceEntry>& trace() const { return trace_; }
  std::uint64_t delivered() const { return delivered_; }

 private:
  class Host;
  struct Slot;
  struct Event {
    std::uint32_t node;
    EventKey key;
    std::uint64_t seq;
    std::function<void()> fn;
  };

  void enqueue(std::uint32_t from, std::uint32_t to, Message m);
  void post(std::uint32_t node, EventKey key, std::function<void()> fn);
  void activity(int delta);
  bool deliver_one();

  std::mt19937_64 rng_;
  bool record_;
  bool running_ = false;
  std::vector<std::unique_ptr<Slot>> slots_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::deque<Message>> links_;
  std::size_t pending_ = 0;
  std::vector<TraceEntry> trace_;
  std::uint64_t delivered_ = 0;

  std::mutex mu_;  // guards the fields below
  std::condition_variable cv_;
  std::vector<Event> events_;
  std::uint64_t event_seq_ = 0;
  long activity_ = 0;
};

}  // namespace hyjob::runtime
