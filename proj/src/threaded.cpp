#include "hyjob/threaded.hpp"

#include <spawn.h>
#include <sys/wait.h>

#include <cerrno>
#include <cstring>
#include <iostream>

#include "hyjob/worker.hpp"

extern char** environ;

namespace hyjob::runtime {

ThreadedHost::ThreadedHost(transport::Network& net, std::unique_ptr<Node> node)
    : net_(net), node_(std::move(node)), listener_(net.listen()), address_(listener_->address()) {}

ThreadedHost::~ThreadedHost() {
  if (loop_thread_.joinable()) {
    post({}, [this] { stopping_ = true; });
    join();
  }
  teardown();
  // The node's own threads may still post while it winds down.
  node_.reset();
}

void ThreadedHost::start() {
  acceptor_ = std::thread([this] {
    while (true) {
      std::unique_ptr<transport::Endpoint> ep;
      try {
        ep = listener_->accept();
      } catch (const Error&) {
        return;
      }
      adopt(std::move(ep));
    }
  });
  loop_thread_ = std::thread([this] { loop(); });
}

PeerId ThreadedHost::adopt(std::unique_ptr<transport::Endpoint> ep) {
  std::shared_ptr<transport::Endpoint> shared(std::move(ep));
  std::lock_guard lock(mu_);
  if (closed_) {
    shared->close();
    return 0;
  }
  auto id = next_peer_++;
  conns_[id] = shared;
  readers_.emplace_back([this, id, shared] {
    while (true) {
      try {
        push(id, shared->receive());
      } catch (const Error&) {
        push(id, Closed{});
        return;
      }
    }
  });
  return id;
}

void ThreadedHost::push(PeerId from, Item item) {
  {
    std::lock_guard lock(mu_);
    queue_.emplace_back(from, std::move(item));
  }
  cv_.notify_one();
}

PeerId ThreadedHost::connect(const std::string& address) { return adopt(net_.connect(address)); }

void ThreadedHost::send(PeerId to, Message m) {
  std::shared_ptr<transport::Endpoint> ep;
  {
    std::lock_guard lock(mu_);
    auto it = conns_.find(to);
    if (it == conns_.end()) return;
    ep = it->second;
  }
  try {
    ep->send(m);
  } catch (const Error&) {
    // The peer is gone; its reader reports the closure to the node.
  }
}

void ThreadedHost::post(EventKey, std::function<void()> fn) { push(0, std::move(fn)); }

void ThreadedHost::loop() {
  node_->start(*this);
  while (!stopping_) {
    std::pair<PeerId, Item> next;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return !queue_.empty(); });
      next = std::move(queue_.front());
      queue_.pop_front();
    }
    auto& [from, item] = next;
    try {
      if (auto* m = std::get_if<Message>(&item)) {
        node_->on_message(from, std::move(*m));
      } else if (std::holds_alternative<Closed>(item)) {
        node_->on_peer_closed(from);
      } else {
        std::get<std::function<void()>>(item)();
      }
    } catch (const std::exception& e) {
      std::cerr << "node at " << address_ << ": handler failed: " << e.what() << "\n";
    }
  }
}

void ThreadedHost::join() {
  if (joined_) return;
  joined_ = true;
  if (loop_thread_.joinable()) loop_thread_.join();
  teardown();
}

void ThreadedHost::teardown() {
  listener_->close();
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> readers;
  {
    std::lock_guard lock(mu_);
    closed_ = true;
    for (auto& [id, ep] : conns_) ep->close();
    readers.swap(readers_);
  }
  for (auto& t : readers) t.join();
}

// ---- spawners ----------------------------------------------------------------

ThreadSpawner::~ThreadSpawner() { join_all(); }

void ThreadSpawner::spawn(std::uint32_t worker_id, std::uint32_t cores, const std::string& sub_address) {
  auto host = std::make_unique<ThreadedHost>(
      net_, std::make_unique<WorkerNode>(worker_id, cores, sub_address, registry_));
  host->start();
  std::lock_guard lock(mu_);
  hosts_.push_back(std::move(host));
}

void ThreadSpawner::join_all() {
  std::vector<std::unique_ptr<ThreadedHost>> hosts;
  {
    std::lock_guard lock(mu_);
    hosts.swap(hosts_);
  }
  for (auto& h : hosts) h->join();
}

ProcessSpawner::~ProcessSpawner() { join_all(); }

void ProcessSpawner::spawn(std::uint32_t worker_id, std::uint32_t cores, const std::string& sub_address) {
  std::vector<std::string> args{executable_, "worker",  "--connect", sub_address, "--id", std::to_string(worker_id),
                                "--cores",   std::to_string(cores)};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  pid_t pid = 0;
  int rc = posix_spawn(&pid, executable_.c_str(), nullptr, nullptr, argv.data(), environ);
  if (rc != 0) fail(ErrorCode::Io, "cannot start worker process '" + executable_ + "': " + std::strerror(rc));
  std::lock_guard lock(mu_);
  pids_.push_back(pid);
}

int ProcessSpawner::join_all() {
  std::vector<int> pids;
  {
    std::lock_guard lock(mu_);
    pids.swap(pids_);
  }
  int failures = 0;
  for (auto pid : pids) {
    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) ++failures;
  }
  return failures;
}

void run_worker_process(const std::string& sub_address, std::uint32_t worker_id, std::uint32_t cores,
                        const FunctionRegistry& registry) {
  registry.freeze();
  transport::TcpNetwork net;
  ThreadedHost host(net, std::make_unique<WorkerNode>(worker_id, cores, sub_address, registry));
  host.start();
  host.join();
}

}  // namespace hyjob::runtime
