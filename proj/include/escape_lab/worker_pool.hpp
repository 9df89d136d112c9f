#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace escape_lab {

/// Fixed-size pool of workers running index-range jobs.
///
/// A job is a callable invoked once per index in [0, count). Indices are
/// handed out dynamically, so callers must write results into per-index
/// slots; output order never depends on the worker count. The calling thread
/// participates, so a pool of size 1 owns no extra threads.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t threads = std::thread::hardware_concurrency())
      : size_(std::max<std::size_t>(1, threads)) {
    for (std::size_t i = 1; i < size_; ++i) {
      workers_.emplace_back([this](std::stop_token st) { worker_loop(st); });
    }
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      shutdown_ = true;
    }
    wake_.notify_all();
    for (auto& w : workers_) w.request_stop();
  }

  std::size_t size() const noexcept { return size_; }

  template <class Fn>
  void parallel_for(std::size_t count, Fn&& fn) {
    if (count == 0) return;
    if (size_ == 1 || count == 1) {
      for (std::size_t i = 0; i < count; ++i) fn(i);
      return;
    }
    std::function<void(std::size_t)> body = std::forward<Fn>(fn);
    std::unique_lock job_lock(job_mutex_);
    {
      std::lock_guard lock(mutex_);
      body_ = &body;
      count_ = count;
      next_.store(0);
      active_ = workers_.size();
      error_ = nullptr;
      ++generation_;
    }
    wake_.notify_all();
    run_indices();
    std::unique_lock lock(mutex_);
    done_.wait(lock, [this] { return active_ == 0; });
    body_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void run_indices() {
    for (;;) {
      const std::size_t i = next_.fetch_add(1);
      if (i >= count_) return;
      try {
        (*body_)(i);
      } catch (...) {
        std::lock_guard lock(mutex_);
        if (!error_) error_ = std::current_exception();
        next_.store(count_);
      }
    }
  }

  void worker_loop(std::stop_token st) {
    std::size_t seen = 0;
    for (;;) {
      {
        std::unique_lock lock(mutex_);
        wake_.wait(lock, [&] { return shutdown_ || generation_ != seen; });
        if (shutdown_ || st.stop_requested()) return;
        seen = generation_;
      }
      run_indices();
      {
        std::lock_guard lock(mutex_);
        --active_;
      }
      done_.notify_all();
    }
  }

  std::size_t size_;
  std::vector<std::jthread> workers_;
  std::mutex job_mutex_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  std::function<void(std::size_t)>* body_ = nullptr;
  std::size_t count_ = 0;
  std::atomic<std::size_t> next_{0};
  std::size_t active_ = 0;
  std::size_t generation_ = 0;
  bool shutdown_ = false;
  std::exception_ptr error_;
};

// Runs fn over [0, count) on the pool when one is supplied, inline otherwise.
template <class Fn>
void for_each_index(WorkerPool* pool, std::size_t count, Fn&& fn) {
  if (pool) {
    pool->parallel_for(count, std::forward<Fn>(fn));
  } else {
    for (std::size_t i = 0; i < count; ++i) fn(i);
  }
}

}  // namespace escape_lab
