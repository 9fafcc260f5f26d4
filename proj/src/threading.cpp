#include "iform/threading.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <thread>
#include <vector>

namespace iform {

namespace {

std::atomic<int> g_threads{1};

// Lazy persistent pool; workers park on a condition variable between jobs.
// Intentionally leaked so detached workers never observe destruction.
class Pool {
public:
    static Pool& instance() {
        static Pool* p = new Pool();
        return *p;
    }

    // Not reentrant: kernels never nest parallel regions.
    void run(std::size_t n, int nthreads, const std::function<void(std::size_t, std::size_t)>& fn) {
        ensure_workers(nthreads - 1);
        std::size_t chunks = static_cast<std::size_t>(nthreads);
        {
            std::unique_lock<std::mutex> lk(m_);
            job_fn_ = &fn;
            job_chunks_ = chunks;
            job_base_ = n / chunks;
            job_rem_ = n % chunks;
            pending_ = workers_.size();  // every worker wakes exactly once
            ++generation_;
        }
        cv_.notify_all();
        run_chunk(0);  // chunk 0 runs on the caller
        std::unique_lock<std::mutex> lk(m_);
        done_cv_.wait(lk, [&] { return pending_ == 0; });
        job_fn_ = nullptr;
    }

private:
    Pool() = default;

    void run_chunk(std::size_t c) {
        std::size_t lo = c * job_base_ + std::min(c, job_rem_);
        std::size_t hi = lo + job_base_ + (c < job_rem_ ? 1 : 0);
        if (lo < hi) (*job_fn_)(lo, hi);
    }

    void ensure_workers(int n) {
        while (static_cast<int>(workers_.size()) < n) {
            std::size_t idx = workers_.size() + 1;  // this worker's chunk index
            workers_.emplace_back([this, idx] {
                std::uint64_t seen = 0;
                for (;;) {
                    {
                        std::unique_lock<std::mutex> lk(m_);
                        cv_.wait(lk, [&] { return generation_ != seen; });
                        seen = generation_;
                    }
                    // Job state is stable for the whole generation.
                    if (idx < job_chunks_) run_chunk(idx);
                    std::lock_guard<std::mutex> lk(m_);
                    if (--pending_ == 0) done_cv_.notify_one();
                }
            });
            workers_.back().detach();
        }
    }

    std::mutex m_;
    std::condition_variable cv_, done_cv_;
    std::vector<std::thread> workers_;
    const std::function<void(std::size_t, std::size_t)>* job_fn_ = nullptr;
    std::size_t job_chunks_ = 0, job_base_ = 0, job_rem_ = 0;
    std::size_t pending_ = 0;
    std::uint64_t generation_ = 0;
};

}  // namespace

void set_threads(int n) { g_threads.store(n < 1 ? 1 : n); }

int threads() { return g_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    int nt = g_threads.load();
    if (n == 0) return;
    if (static_cast<std::size_t>(nt) > n) nt = static_cast<int>(n);
    if (nt <= 1) {
        fn(0, n);
        return;
    }
    Pool::instance().run(n, nt, fn);
}

}  // namespace iform
