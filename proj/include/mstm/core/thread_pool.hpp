#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mstm {

/// Work-sharing pool for loops whose iterations write disjoint outputs.
///
/// Iterations are handed out by index from an atomic counter, so the set of
/// computations is independent of thread count and schedule; results are
/// identical for any --threads value as long as iterations do not share
/// accumulators. Reductions must go into per-iteration slots and be combined
/// afterwards in index order.
class ThreadPool {
  public:
    explicit ThreadPool(std::size_t n_threads = 0) {
        if (n_threads == 0) n_threads = default_threads();
        for (std::size_t i = 1; i < n_threads; ++i)
            workers_.emplace_back([this] { worker_loop(); });
    }

    ~ThreadPool() {
        {
            std::lock_guard<std::mutex> lock(mu_);
            stopping_ = true;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    std::size_t thread_count() const { return workers_.size() + 1; }

    static std::size_t default_threads() {
        unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : hw;
    }

    /// Runs fn(i) for i in [0, n). Blocks until every iteration finished and
    /// all workers left the job, so back-to-back calls cannot overlap.
    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
        if (n == 0) return;
        if (workers_.empty() || n == 1) {
            for (std::size_t i = 0; i < n; ++i) fn(i);
            return;
        }
        {
            std::lock_guard<std::mutex> lock(mu_);
            job_ = &fn;
            next_.store(0, std::memory_order_relaxed);
            total_ = n;
            remaining_.store(n, std::memory_order_relaxed);
            ++generation_;
        }
        cv_.notify_all();
        run_share(fn);
        std::unique_lock<std::mutex> lock(mu_);
        done_cv_.wait(lock, [this] {
            return remaining_.load(std::memory_order_acquire) == 0 && active_ == 0;
        });
        job_ = nullptr;
    }

  private:
    void run_share(const std::function<void(std::size_t)>& fn) {
        while (true) {
            std::size_t i = next_.fetch_add(1, std::memory_order_relaxed);
            if (i >= total_) break;
            fn(i);
            if (remaining_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
                std::lock_guard<std::mutex> lock(mu_);
                done_cv_.notify_all();
            }
        }
    }

    void worker_loop() {
        std::uint64_t seen = 0;
        while (true) {
            const std::function<void(std::size_t)>* job = nullptr;
            {
                std::unique_lock<std::mutex> lock(mu_);
                cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
                if (stopping_) return;
                seen = generation_;
                job = job_;
                if (!job) continue;
                ++active_;
            }
            run_share(*job);
            {
                std::lock_guard<std::mutex> lock(mu_);
                --active_;
                if (active_ == 0) done_cv_.notify_all();
            }
        }
    }

    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    const std::function<void(std::size_t)>* job_ = nullptr;
    std::atomic<std::size_t> next_{0};
    std::size_t total_ = 0;
    std::atomic<std::size_t> remaining_{0};
    std::size_t active_ = 0;
    std::uint64_t generation_ = 0;
    bool stopping_ = false;
};

}  // namespace mstm
