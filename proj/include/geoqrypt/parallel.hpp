#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace geoqrypt {

// Static block partition of [0, n) across `threads` workers. Each index is
// handed to fn exactly once and fn must write only to its own slot, so the
// result is identical for every thread count (including 1).
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::thread::hardware_concurrency();
    if (threads == 0) threads = 1;
    if (threads == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    if (threads > n) threads = static_cast<unsigned>(n);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::size_t chunk = n / threads;
    std::size_t rem = n % threads;
    std::size_t begin = 0;
    for (unsigned t = 0; t < threads; ++t) {
        std::size_t end = begin + chunk + (t < rem ? 1 : 0);
        pool.emplace_back([begin, end, &fn] {
            for (std::size_t i = begin; i < end; ++i) fn(i);
        });
        begin = end;
    }
    for (auto& th : pool) th.join();
}

} // namespace geoqrypt
