#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace simplexscope {

/// Worker count: hardware concurrency capped by SIMPLEXSCOPE_THREADS.
inline int worker_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("SIMPLEXSCOPE_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < n) n = cap;
    }
    return n;
}

/// Compensated (Kahan) accumulator. Chunk results are merged in fixed chunk
/// order, so reductions do not depend on the number of worker threads.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }

    double value() const { return sum; }
};

/// Splits [0, total) into fixed chunks of size `chunk_size` (the chunk layout
/// never depends on the thread count), runs `body(chunk_index, lo, hi)` on a
/// pool of workers, and returns per-chunk results indexed by chunk. Callers
/// combine the vector in index order to stay deterministic.
template <typename T, typename Body>
std::vector<T> run_chunked(std::int64_t total, std::int64_t chunk_size, Body&& body) {
    if (total <= 0) return {};
    if (chunk_size < 1) chunk_size = 1;
    const std::int64_t n_chunks = (total + chunk_size - 1) / chunk_size;
    std::vector<T> results(static_cast<std::size_t>(n_chunks));

    const int workers = static_cast<int>(std::min<std::int64_t>(worker_count(), n_chunks));
    if (workers <= 1) {
        for (std::int64_t c = 0; c < n_chunks; ++c) {
            const std::int64_t lo = c * chunk_size;
            const std::int64_t hi = std::min(total, lo + chunk_size);
            results[static_cast<std::size_t>(c)] = body(c, lo, hi);
        }
        return results;
    }

    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::int64_t c = next.fetch_add(1);
                if (c >= n_chunks) return;
                const std::int64_t lo = c * chunk_size;
                const std::int64_t hi = std::min(total, lo + chunk_size);
                results[static_cast<std::size_t>(c)] = body(c, lo, hi);
            }
        });
    }
    for (auto& t : pool) t.join();
    return results;
}

}  // namespace simplexscope
