#include "hyjob/thread_pool.hpp"

#include <algorithm>

namespace hyjob {

ThreadPool::ThreadPool(std::size_t lanes) {
  lanes = std::max<std::size_t>(1, lanes);
  threads_.reserve(lanes);
  for (std::size_t i = 0; i < lanes; ++i) threads_.emplace_back([this] { lane_loop(); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::submit(std::function<void()> task) {
  {
    std::lock_guard lock(mu_);
    tasks_.push_back(std::move(task));
  }
  cv_.notify_one();
}

void ThreadPool::lane_loop() {
  while (true) {
    std::function<void()> task;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stopping_ || !tasks_.empty(); });
      // Drain queued work before exiting so every submitted task runs.
      if (tasks_.empty()) return;
      task = std::move(tasks_.front());
      tasks_.pop_front();
    }
    task();
  }
}

}  // namespace hyjob
