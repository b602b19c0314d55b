#include "hyjob/hub.hpp"

#include <algorithm>

namespace hyjob::runtime {

std::uint64_t subject_of(const Message& m) {
  return std::visit(
      [](const auto& x) -> std::uint64_t {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, HelloMsg>) return x.worker_id;
        else if constexpr (std::is_same_v<T, AssignJobMsg> || std::is_same_v<T, JobDoneMsg> ||
                           std::is_same_v<T, JobFailedMsg>) return x.job_id;
        else if constexpr (std::is_same_v<T, FetchMsg> || std::is_same_v<T, ChunksMsg> ||
                           std::is_same_v<T, ReleaseMsg>) return x.producer;
        else if constexpr (std::is_same_v<T, InjectMsg>) return x.origin;
        else if constexpr (std::is_same_v<T, InjectAckMsg>) return x.mapping.empty() ? 0 : x.mapping.front().second;
        else return 0;
      },
      m);
}

std::uint64_t frame_digest(const Message& m) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto b : encode(m)) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

struct InprocHub::Slot {
  std::unique_ptr<Node> node;
  std::unique_ptr<Host> host;
  bool started = false;
  bool stopped = false;
};

class InprocHub::Host final : public NodeHost {
 public:
  Host(InprocHub& hub, std::uint32_t index) : hub_(hub), index_(index), address_(address_of(index)) {}

  const std::string& address() const override { return address_; }

  PeerId connect(const std::string& address) override {
    const std::string prefix = "hub:";
    if (address.rfind(prefix, 0) == 0) {
      try {
        auto target = std::stoull(address.substr(prefix.size()));
        if (target < hub_.slots_.size()) return target;
      } catch (const std::exception&) {
      }
    }
    fail(ErrorCode::ConnectFailed, "no hub node at '" + address + "'");
  }

  void send(PeerId to, Message m) override { hub_.enqueue(index_, static_cast<std::uint32_t>(to), std::move(m)); }
  void post(EventKey key, std::function<void()> fn) override { hub_.post(index_, key, std::move(fn)); }
  void activity(int delta) override { hub_.activity(delta); }
  void stop() override { hub_.slots_[index_]->stopped = true; }

 private:
  InprocHub& hub_;
  std::uint32_t index_;
  std::string address_;
};

InprocHub::InprocHub(std::uint64_t seed, bool record_trace) : rng_(seed), record_(record_trace) {}

InprocHub::~InprocHub() {
  // Nodes may own thread pools whose tasks post back into the hub; tear
  // them down while the hub is still intact, newest first.
  while (!slots_.empty()) {
    slots_.back()->node.reset();
    slots_.pop_back();
  }
}

std::string InprocHub::address_of(std::uint32_t index) { return "hub:" + std::to_string(index); }

std::uint32_t InprocHub::add(std::unique_ptr<Node> node) {
  auto index = static_cast<std::uint32_t>(slots_.size());
  auto slot = std::make_unique<Slot>();
  slot->node = std::move(node);
  slot->host = std::make_unique<Host>(*this, index);
  slots_.push_back(std::move(slot));
  if (running_) {
    slots_[index]->started = true;
    slots_[index]->node->start(*slots_[index]->host);
  }
  return index;
}

NodeHost& InprocHub::host(std::uint32_t index) { return *slots_.at(index)->host; }
Node& InprocHub::node(std::uint32_t index) { return *slots_.at(index)->node; }

void InprocHub::enqueue(std::uint32_t from, std::uint32_t to, Message m) {
  links_[{from, to}].push_back(std::move(m));
  ++pending_;
}

void InprocHub::post(std::uint32_t node, EventKey key, std::function<void()> fn) {
  {
    std::lock_guard lock(mu_);
    events_.push_back({node, key, event_seq_++, std::move(fn)});
  }
  cv_.notify_all();
}

void InprocHub::activity(int delta) {
  {
    std::lock_guard lock(mu_);
    activity_ += delta;
  }
  cv_.notify_all();
}

bool InprocHub::deliver_one() {
  if (pending_ == 0) return false;
  std::vector<std::map<std::pair<std::uint32_t, std::uint32_t>, std::deque<Message>>::iterator> ready;
  for (auto it = links_.begin(); it != links_.end(); ++it) {
    if (!it->second.empty()) ready.push_back(it);
  }
  auto pick = ready[rng_() % ready.size()];
  auto [from, to] = pick->first;
  Message m = std::move(pick->second.front());
  pick->second.pop_front();
  --pending_;
  auto& slot = *slots_.at(to);
  if (slot.stopped) return true;
  if (record_) trace_.push_back({from, to, tag_of(m), subject_of(m), frame_digest(m)});
  ++delivered_;
  slot.node->on_message(from, std::move(m));
  return true;
}

void InprocHub::run() {
  running_ = true;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i]->started) continue;
    slots_[i]->started = true;
    slots_[i]->node->start(*slots_[i]->host);
  }
  while (true) {
    if (deliver_one()) continue;
    std::vector<Event> batch;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return activity_ == 0; });
      batch.swap(events_);
    }
    if (batch.empty()) break;
    std::sort(batch.begin(), batch.end(), [](const Event& a, const Event& b) {
      if (a.node != b.node) return a.node < b.node;
      if (a.key != b.key) return a.key < b.key;
      return a.seq < b.seq;
    });
    for (auto& e : batch) e.fn();
  }
  running_ = false;
}

}  // namespace hyjob::runtime
