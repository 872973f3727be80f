#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace aptest {

/// Worker count for trajectory-level parallelism: APTEST_WORKERS when set,
/// otherwise the hardware concurrency.
inline int default_worker_count() {
    if (const char* env = std::getenv("APTEST_WORKERS")) {
        int v = std::atoi(env);
        if (v >= 1) {
            return v;
        }
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Run fn(i) for i in [0, count) across workers. Each index is processed by
/// exactly one worker; callers make results scheduler-independent by writing
/// into per-index slots and reducing in index order afterwards.
template <class F>
void parallel_for_index(std::int64_t count, F&& fn, int workers = 0) {
    if (workers <= 0) {
        workers = default_worker_count();
    }
    if (workers == 1 || count < 2) {
        for (std::int64_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    workers = static_cast<int>(std::min<std::int64_t>(workers, count));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::int64_t chunk = (count + workers - 1) / workers;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        std::int64_t lo = w * chunk;
        std::int64_t hi = std::min(count, lo + chunk);
        if (lo >= hi) {
            break;
        }
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::int64_t i = lo; i < hi; ++i) {
                    fn(i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

}  // namespace aptest
