#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace bque {

/// Run fn(begin, end) over [0, total) in fixed-size chunks on `workers`
/// threads. Chunk boundaries depend only on chunk_size, never on the worker
/// count; callers that need reproducible reductions should write per-chunk
/// results into chunk-indexed slots and merge them sequentially afterwards.
inline void parallel_chunks(std::size_t total, std::size_t chunk_size, unsigned workers,
                            const std::function<void(std::size_t chunk_index, std::size_t begin,
                                                     std::size_t end)>& fn) {
    if (total == 0) return;
    if (chunk_size == 0) chunk_size = 1;
    const std::size_t nchunks = (total + chunk_size - 1) / chunk_size;
    if (workers == 0) workers = std::thread::hardware_concurrency();
    if (workers <= 1 || nchunks == 1) {
        for (std::size_t c = 0; c < nchunks; ++c)
            fn(c, c * chunk_size, std::min(total, (c + 1) * chunk_size));
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex err_mtx;
    auto work = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= nchunks) return;
            try {
                fn(c, c * chunk_size, std::min(total, (c + 1) * chunk_size));
            } catch (...) {
                std::lock_guard lock(err_mtx);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::jthread> pool;
    const unsigned n = std::min<std::size_t>(workers, nchunks);
    pool.reserve(n);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(work);
    pool.clear();  // join
    if (error) std::rethrow_exception(error);
}

}  // namespace bque
