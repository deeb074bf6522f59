#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace itd {

/**
Run body(i) for i in [0, n) on up to hardware_concurrency threads.

Each index is handled by exactly one call; callers write results into
preallocated per-index slots so the outcome does not depend on scheduling.
Falls back to a plain loop on single-core machines or small n.
*/
template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t min_per_thread = 1) {
    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    const std::size_t threads = std::min(hw, min_per_thread == 0 ? n : n / std::max<std::size_t>(1, min_per_thread));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += threads) body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

} // namespace itd
