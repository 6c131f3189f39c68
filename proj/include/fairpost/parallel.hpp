#pragma once

// Minimal fork-join helper. Results must be written to per-index slots so
// the outcome is independent of the worker count; FAIRPOST_THREADS caps the
// pool (<=1 runs inline).

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace fairpost {

inline int effective_threads(int requested = 0) {
    int n = requested;
    if (const char* env = std::getenv("FAIRPOST_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = (n >= 1) ? std::min(n, cap) : cap;
    }
    if (n < 1) {
        const unsigned hw = std::thread::hardware_concurrency();
        n = hw == 0 ? 1 : static_cast<int>(hw);
    }
    return n;
}

// Runs fn(i) for i in [0, count); rethrows the first captured exception.
inline void parallel_for(std::size_t count,
                         const std::function<void(std::size_t)>& fn,
                         int requested_threads = 0) {
    const int threads =
        std::min<std::size_t>(effective_threads(requested_threads), count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace fairpost
