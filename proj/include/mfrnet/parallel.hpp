#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace mfrnet {

// Persistent worker pool for data-parallel loops. Jobs must write disjoint
// outputs; any reduction is combined by the caller in a fixed order, so
// results do not depend on the number of workers.
class ThreadPool {
  struct JobState {
    const std::function<void(std::int64_t)>* fn = nullptr;
    std::int64_t count = 0;
    std::atomic<std::int64_t> next{0};
    std::atomic<std::int64_t> done{0};
    std::mutex m;
    std::condition_variable finished;
  };

 public:
  explicit ThreadPool(int threads) {
    if (threads < 1) threads = 1;
    for (int i = 0; i + 1 < threads; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const { return static_cast<int>(workers_.size()) + 1; }

  // Runs fn(i) for i in [0, count). Blocks until all jobs finish. The calling
  // thread participates. Nested calls run inline on the caller.
  void parallel_for(std::int64_t count,
                    const std::function<void(std::int64_t)>& fn) {
    if (count <= 0) return;
    if (count == 1 || workers_.empty() || active_.exchange(true)) {
      for (std::int64_t i = 0; i < count; ++i) fn(i);
      return;
    }
    auto job = std::make_shared<JobState>();
    job->fn = &fn;
    job->count = count;
    {
      std::unique_lock<std::mutex> lock(mutex_);
      current_ = job;
    }
    cv_.notify_all();
    run(*job);
    {
      std::unique_lock<std::mutex> lock(job->m);
      job->finished.wait(lock,
                         [&] { return job->done.load() == job->count; });
    }
    {
      std::unique_lock<std::mutex> lock(mutex_);
      if (current_ == job) current_.reset();
    }
    active_.store(false);
  }

 private:
  static void run(JobState& job) {
    std::int64_t done_here = 0;
    for (;;) {
      std::int64_t i = job.next.fetch_add(1);
      if (i >= job.count) break;
      (*job.fn)(i);
      ++done_here;
    }
    if (done_here > 0 &&
        job.done.fetch_add(done_here) + done_here == job.count) {
      std::unique_lock<std::mutex> lock(job.m);
      job.finished.notify_all();
    }
  }

  void worker_loop() {
    std::shared_ptr<JobState> seen;
    for (;;) {
      std::shared_ptr<JobState> job;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return stop_ || current_ != seen; });
        if (stop_) return;
        seen = current_;
        job = current_;
      }
      if (job) run(*job);
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::shared_ptr<JobState> current_;
  std::atomic<bool> active_{false};
  bool stop_ = false;
};

namespace detail {
inline int& configured_threads() {
  static int n = 0;  // 0 = use hardware_concurrency
  return n;
}
}  // namespace detail

inline void set_num_threads(int n) { detail::configured_threads() = n; }

inline int num_threads() {
  int n = detail::configured_threads();
  if (n > 0) return n;
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

inline ThreadPool& global_pool() {
  static ThreadPool pool(num_threads());
  return pool;
}

inline void parallel_for(std::int64_t count,
                         const std::function<void(std::int64_t)>& fn) {
  if (num_threads() <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  global_pool().parallel_for(count, fn);
}

}  // namespace mfrnet
