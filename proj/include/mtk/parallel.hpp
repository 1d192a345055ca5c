#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "mtk/common.hpp"

namespace mtk::parallel {

// Half-open index range [begin, end).
struct ChunkRange {
    std::int64_t begin = 0;
    std::int64_t end = 0;
    std::int64_t size() const { return end - begin; }
};

// Deterministic decomposition of an index set. A plan depends only on the
// problem size and the chunk size — never on how many workers execute it —
// so gathered results are identical across worker counts.
struct TaskPlan {
    std::int64_t total = 0;
    std::vector<ChunkRange> chunks;
};

/// Contiguous chunks covering [0, count), each of at most chunk_size indices.
TaskPlan plan_frames(std::int64_t count, std::int64_t chunk_size);

/// Tiles covering the m(m-1)/2 strict upper-triangle pairs of an m×m matrix,
/// linearized row-major: (0,1), (0,2), …, (0,m-1), (1,2), …
TaskPlan plan_pairs(std::int64_t m, std::int64_t tile_size);

/// Inverse of the row-major upper-triangle linearization used by plan_pairs.
std::pair<std::int64_t, std::int64_t> pair_from_linear(std::int64_t m, std::int64_t linear);

namespace detail {

[[noreturn]] void rethrow_annotated(std::exception_ptr ep, std::int64_t chunk_index);

}  // namespace detail

/// Execute fn over every chunk and gather the per-chunk results in plan
/// order, regardless of completion order. workers <= 1 runs inline. The
/// first failing chunk cancels the remaining work and its exception is
/// rethrown annotated with the chunk index.
template <typename Fn>
auto run(const TaskPlan& plan, Fn&& fn, int workers)
    -> std::vector<std::invoke_result_t<Fn&, ChunkRange>> {
    using Result = std::invoke_result_t<Fn&, ChunkRange>;
    static_assert(!std::is_void_v<Result>, "chunk tasks must return a value");

    const std::int64_t n = static_cast<std::int64_t>(plan.chunks.size());
    std::vector<Result> results(static_cast<std::size_t>(n));
    if (n == 0) return results;

    if (workers <= 1 || n == 1) {
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                results[static_cast<std::size_t>(i)] = fn(plan.chunks[static_cast<std::size_t>(i)]);
            } catch (...) {
                detail::rethrow_annotated(std::current_exception(), i);
            }
        }
        return results;
    }

    std::atomic<std::int64_t> next{0};
    std::atomic<std::int64_t> failed_chunk{-1};
    std::exception_ptr failure;
    std::atomic<bool> failure_set{false};

    auto worker = [&] {
        for (;;) {
            if (failed_chunk.load(std::memory_order_relaxed) >= 0) return;
            const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                results[static_cast<std::size_t>(i)] = fn(plan.chunks[static_cast<std::size_t>(i)]);
            } catch (...) {
                std::int64_t expected = -1;
                if (failed_chunk.compare_exchange_strong(expected, i)) {
                    failure = std::current_exception();
                    failure_set.store(true, std::memory_order_release);
                }
                return;
            }
        }
    };

    const int pool = static_cast<int>(std::min<std::int64_t>(workers, n));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(pool));
    for (int w = 0; w < pool; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    const std::int64_t bad = failed_chunk.load();
    if (bad >= 0 && failure_set.load(std::memory_order_acquire))
        detail::rethrow_annotated(failure, bad);
    return results;
}

}  // namespace mtk::parallel
