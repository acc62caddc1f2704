#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace va {

// Process-wide worker count used by parallel_for; 1 means run inline.
void set_thread_count(unsigned n) noexcept;
unsigned thread_count() noexcept;

// Calls fn(i) for i in [0, n). Each index must write only its own output
// slot, so results do not depend on the thread count.
template <typename Fn> void parallel_for(std::size_t n, Fn &&fn) {
    unsigned workers = thread_count();
    if (workers <= 1 || n < 2 * static_cast<std::size_t>(workers)) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t begin = w * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) {
            break;
        }
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) {
                    fn(i);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        });
    }
    for (auto &t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

} // namespace va
