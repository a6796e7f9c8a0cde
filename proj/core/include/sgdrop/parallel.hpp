#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sgdrop {

inline std::size_t resolve_workers(std::size_t requested, std::size_t tasks) {
    std::size_t n = requested == 0 ? std::max<std::size_t>(1, std::thread::hardware_concurrency()) : requested;
    return std::max<std::size_t>(1, std::min(n, tasks));
}

/// Runs fn(i) for i in [0, count) on a bounded pool. Tasks must write only to
/// their own slot; the first exception is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
    const std::size_t n = resolve_workers(workers, count);
    if (n <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failureMutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(n);
        for (std::size_t w = 0; w < n; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failureMutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace sgdrop
