#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace dceseg::detail {

inline unsigned worker_count() {
    if (const char* env = std::getenv("DCESEG_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1)
            return unsigned(std::min<long>(v, 256));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

// Static chunking over [0, count). Each index is processed exactly once and
// writes only to its own output slot, so results do not depend on the number
// of workers.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const unsigned workers = std::min<std::size_t>(worker_count(), count ? count : 1);
    if (workers <= 1 || count < 2048) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i, 0u);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = std::size_t(w) * chunk;
        const std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi)
            break;
        pool.emplace_back([lo, hi, w, &fn] {
            for (std::size_t i = lo; i < hi; ++i)
                fn(i, w);
        });
    }
    for (auto& t : pool)
        t.join();
}

}  // namespace dceseg::detail
