#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hyjob {

/// Fixed set of execution lanes fed from one FIFO queue. Tasks queued beyond
/// the lane count wait their turn, which is how oversubscribed jobs share
/// a worker.
class ThreadPool {
 public:
  explicit ThreadPool(std::size_t lanes);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  void submit(std::function<void()> task);
  std::size_t lanes() const noexcept { return threads_.size(); }

 private:
  void lane_loop();

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> tasks_;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

}  // namespace hyjob
