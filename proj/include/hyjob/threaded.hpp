#pragma once

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <variant>
#include <vector>

#include "hyjob/node.hpp"
#include "hyjob/registry.hpp"
#include "hyjob/transport.hpp"

namespace hyjob::runtime {

/// Hosts one node on its own control-loop thread, listening on a fresh
/// address of `net`. Every connection gets a reader thread feeding the
/// loop; posted events join the same queue in arrival order.
class ThreadedHost final : public NodeHost {
 public:
  ThreadedHost(transport::Network& net, std::unique_ptr<Node> node);
  ~ThreadedHost() override;

  ThreadedHost(const ThreadedHost&) = delete;
  ThreadedHost& operator=(const ThreadedHost&) = delete;

  void start();
  /// Blocks until the node stops, then closes every connection.
  void join();

  Node& node() { return *node_; }

  const std::string& address() const override { return address_; }
  PeerId connect(const std::string& address) override;
  void send(PeerId to, Message m) override;
  void post(EventKey key, std::function<void()> fn) override;
  void activity(int) override {}
  void stop() override { stopping_ = true; }

 private:
  struct Closed {};
  using Item = std::variant<Message, Closed, std::function<void()>>;

  PeerId adopt(std::unique_ptr<transport::Endpoint> ep);
  void push(PeerId from, Item item);
  void loop();
  void teardown();

  transport::Network& net_;
  std::unique_ptr<Node> node_;
  std::unique_ptr<transport::Listener> listener_;
  std::string address_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::pair<PeerId, Item>> queue_;
  std::map<PeerId, std::shared_ptr<transport::Endpoint>> conns_;
  std::vector<std::thread> readers_;
  PeerId next_peer_ = 1;
  bool closed_ = false;

  std::thread loop_thread_;
  std::thread acceptor_;
  bool stopping_ = false;  // loop thread only
  bool joined_ = false;
};

/// Starts each worker as a ThreadedHost inside this process.
class ThreadSpawner final : public WorkerSpawner {
 public:
  ThreadSpawner(transport::Network& net, const FunctionRegistry& registry) : net_(net), registry_(registry) {}
  ~ThreadSpawner() override;
  void spawn(std::uint32_t worker_id, std::uint32_t cores, const std::string& sub_address) override;
  void join_all();

 private:
  transport::Network& net_;
  const FunctionRegistry& registry_;
  std::mutex mu_;
  std::vector<std::unique_ptr<ThreadedHost>> hosts_;
};

/// Starts each worker as a separate `<exe> worker --connect ADDR --id N
/// --cores C` process. The child must register the same functions.
class ProcessSpawner final : public WorkerSpawner {
 public:
  explicit ProcessSpawner(std::string executable) : executable_(std::move(executable)) {}
  ~ProcessSpawner() override;
  void spawn(std::uint32_t worker_id, std::uint32_t cores, const std::string& sub_address) override;
  /// Waits for every child; returns the number that exited unsuccessfully.
  int join_all();

 private:
  std::string executable_;
  std::mutex mu_;
  std::vector<int> pids_;
};

/// Body of the `worker` subcommand: serves one sub-scheduler over TCP until
/// told to shut down.
void run_worker_process(const std::string& sub_address, std::uint32_t worker_id, std::uint32_t cores,
                        const FunctionRegistry& registry);

}  // namespace hyjob::runtime
