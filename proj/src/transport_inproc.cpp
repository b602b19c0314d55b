#include "hyjob/transport.hpp"

namespace hyjob::transport {
namespace {

// Shared state of one link: a queue per direction plus a closed flag.
struct Channel {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Message> queue[2];
  bool closed = false;
};

class InprocEndpoint final : public Endpoint {
 public:
  InprocEndpoint(std::shared_ptr<Channel> ch, int side) : ch_(std::move(ch)), side_(side) {}
  ~InprocEndpoint() override { close(); }

  void send(const Message& m) override {
    std::lock_guard lock(ch_->mu);
    if (ch_->closed) fail(ErrorCode::PeerClosed, "inproc peer closed");
    ch_->queue[1 - side_].push_back(m);
    ch_->cv.notify_all();
  }

  Message receive() override {
    std::unique_lock lock(ch_->mu);
    auto& q = ch_->queue[side_];
    ch_->cv.wait(lock, [&] { return !q.empty() || ch_->closed; });
    if (q.empty()) fail(ErrorCode::PeerClosed, "inproc peer closed");
    Message m = std::move(q.front());
    q.pop_front();
    return m;
  }

  void close() override {
    std::lock_guard lock(ch_->mu);
    ch_->closed = true;
    ch_->cv.notify_all();
  }

 private:
  std::shared_ptr<Channel> ch_;
  int side_;
};

}  // namespace

struct InprocNetwork::Backlog {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::unique_ptr<Endpoint>> pending;
  bool closed = false;
};

class InprocListener final : public Listener {
 public:
  InprocListener(InprocNetwork& net, std::string address, std::shared_ptr<InprocNetwork::Backlog> b)
      : net_(net), address_(std::move(address)), backlog_(std::move(b)) {}
  ~InprocListener() override { close(); }

  std::unique_ptr<Endpoint> accept() override {
    std::unique_lock lock(backlog_->mu);
    backlog_->cv.wait(lock, [&] { return !backlog_->pending.empty() || backlog_->closed; });
    if (backlog_->closed) fail(ErrorCode::PeerClosed, "listener closed");
    auto ep = std::move(backlog_->pending.front());
    backlog_->pending.pop_front();
    return ep;
  }

  const std::string& address() const override { return address_; }

  void close() override {
    {
      std::lock_guard lock(backlog_->mu);
      if (backlog_->closed) return;
      backlog_->closed = true;
      backlog_->pending.clear();
      backlog_->cv.notify_all();
    }
    std::lock_guard lock(net_.mu_);
    net_.listeners_.erase(address_);
  }

 private:
  InprocNetwork& net_;
  std::string address_;
  std::shared_ptr<InprocNetwork::Backlog> backlog_;
};

std::unique_ptr<Listener> InprocNetwork::listen() {
  std::lock_guard lock(mu_);
  auto address = "inproc:" + std::to_string(next_++);
  auto backlog = std::make_shared<Backlog>();
  listeners_[address] = backlog;
  return std::make_unique<InprocListener>(*this, address, backlog);
}

std::unique_ptr<Endpoint> InprocNetwork::connect(const std::string& address) {
  std::shared_ptr<Backlog> backlog;
  {
    std::lock_guard lock(mu_);
    auto it = listeners_.find(address);
    if (it == listeners_.end()) fail(ErrorCode::ConnectFailed, "nothing listens on " + address);
    backlog = it->second;
  }
  auto [mine, theirs] = pair();
  std::lock_guard lock(backlog->mu);
  if (backlog->closed) fail(ErrorCode::ConnectFailed, address + " is closed");
  backlog->pending.push_back(std::move(theirs));
  backlog->cv.notify_all();
  return std::move(mine);
}

std::pair<std::unique_ptr<Endpoint>, std::unique_ptr<Endpoint>> InprocNetwork::pair() {
  auto ch = std::make_shared<Channel>();
  return {std::make_unique<InprocEndpoint>(ch, 0), std::make_unique<InprocEndpoint>(ch, 1)};
}

}  // namespace hyjob::transport
