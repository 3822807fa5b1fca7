#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace sintro {

inline std::size_t resolve_threads(std::size_t configured) {
    if (configured > 0) return configured;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Runs fn(begin, end, slot) over contiguous chunks of [0, n). Slot assignment
// is a pure function of (n, threads), so per-slot accumulators reduced in slot
// order give deterministic results. The first exception thrown by any worker
// is rethrown on the calling thread after all workers joined.
inline void parallel_chunks(std::size_t n, std::size_t threads,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    threads = std::min(resolve_threads(threads), n == 0 ? std::size_t(1) : n);
    if (threads <= 1) {
        fn(0, n, 0);
        return;
    }
    const std::size_t chunk = (n + threads - 1) / threads;
    std::vector<std::thread> workers;
    workers.reserve(threads - 1);
    std::vector<std::exception_ptr> errors(threads);
    auto guarded = [&](std::size_t begin, std::size_t end, std::size_t slot) {
        try {
            fn(begin, end, slot);
        } catch (...) {
            errors[slot] = std::current_exception();
        }
    };
    for (std::size_t t = 1; t < threads; ++t) {
        const std::size_t begin = std::min(n, t * chunk);
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back(guarded, begin, end, t);
    }
    guarded(0, std::min(n, chunk), 0);
    for (auto& w : workers) w.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace sintro
