#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace gausskin {

// Default worker count: GAUSSKIN_WORKERS env var, else hardware concurrency.
inline int default_worker_count() {
    if (const char* env = std::getenv("GAUSSKIN_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Static contiguous partition of [begin, end) over `workers` threads.
// Each index is processed exactly once and writes only its own output slot,
// so results are identical for any worker count.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, int workers, Fn&& fn) {
    const std::size_t count = end > begin ? end - begin : 0;
    if (count == 0) return;
    if (workers <= 1 || count == 1) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }
    const std::size_t n_threads = std::min<std::size_t>(workers, count);
    const std::size_t chunk = (count + n_threads - 1) / n_threads;
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        const std::size_t lo = begin + t * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace gausskin
