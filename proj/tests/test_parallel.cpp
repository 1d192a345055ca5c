#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <vector>

#include "mtk/parallel.hpp"
#include "mtk/rng.hpp"

using namespace mtk;

TEST_CASE("plan_frames splits 63 frames into chunks of 8") {
    const auto plan = parallel::plan_frames(63, 8);
    REQUIRE(plan.chunks.size() == 8);
    for (int i = 0; i < 7; ++i) CHECK(plan.chunks[i].size() == 8);
    CHECK(plan.chunks[7].size() == 7);
    CHECK(plan.chunks.front().begin == 0);
    CHECK(plan.chunks.back().end == 63);
}

TEST_CASE("plan_frames single frame") {
    const auto plan = parallel::plan_frames(1, 8);
    REQUIRE(plan.chunks.size() == 1);
    CHECK(plan.chunks[0].begin == 0);
    CHECK(plan.chunks[0].end == 1);
}

TEST_CASE("plan_frames chunks partition [0, T) for random sizes") {
    Rng rng(11);
    for (int it = 0; it < 200; ++it) {
        const std::int64_t count = rng.uniform_int(1, 10000);
        const std::int64_t chunk = rng.uniform_int(1, 700);
        const auto plan = parallel::plan_frames(count, chunk);
        std::int64_t expect_begin = 0;
        for (const auto& c : plan.chunks) {
            CHECK(c.begin == expect_begin);  // contiguous, no gap, no overlap
            CHECK(c.size() >= 1);
            CHECK(c.size() <= chunk);
            expect_begin = c.end;
        }
        CHECK(expect_begin == count);
    }
}

TEST_CASE("plan_frames rejects degenerate arguments") {
    CHECK_THROWS_AS(parallel::plan_frames(0, 4), ConfigError);
    CHECK_THROWS_AS(parallel::plan_frames(4, 0), ConfigError);
}

TEST_CASE("plan_pairs covers m=3 exactly") {
    const auto plan = parallel::plan_pairs(3, 100);
    CHECK(plan.total == 3);
    REQUIRE(plan.chunks.size() == 1);
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    for (std::int64_t l = plan.chunks[0].begin; l < plan.chunks[0].end; ++l)
        pairs.push_back(parallel::pair_from_linear(3, l));
    const std::vector<std::pair<std::int64_t, std::int64_t>> expect{{0, 1}, {0, 2}, {1, 2}};
    CHECK(pairs == expect);
}

TEST_CASE("plan_pairs enumerates each of the 4950 m=100 pairs exactly once") {
    const auto plan = parallel::plan_pairs(100, 97);
    CHECK(plan.total == 4950);
    std::vector<int> seen(100 * 100, 0);
    std::int64_t visited = 0;
    for (const auto& chunk : plan.chunks) {
        for (std::int64_t l = chunk.begin; l < chunk.end; ++l) {
            const auto [i, j] = parallel::pair_from_linear(100, l);
            CHECK(i < j);
            ++seen[static_cast<std::size_t>(i * 100 + j)];
            ++visited;
        }
    }
    CHECK(visited == 4950);
    for (std::int64_t i = 0; i < 100; ++i)
        for (std::int64_t j = i + 1; j < 100; ++j)
            CHECK(seen[static_cast<std::size_t>(i * 100 + j)] == 1);
}

TEST_CASE("plan_pairs with a tile covering everything yields one chunk") {
    const auto plan = parallel::plan_pairs(12, 12 * 11 / 2);
    CHECK(plan.chunks.size() == 1);
    CHECK(plan.chunks[0].size() == 66);
}

TEST_CASE("pair_from_linear inverts the row-major upper-triangle order") {
    Rng rng(5);
    for (int it = 0; it < 50; ++it) {
        const std::int64_t m = rng.uniform_int(2, 400);
        std::int64_t linear = 0;
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = i + 1; j < m; ++j) {
                if (rng.uniform01() < 0.01 || linear == 0 || linear == m * (m - 1) / 2 - 1) {
                    const auto [pi, pj] = parallel::pair_from_linear(m, linear);
                    CHECK(pi == i);
                    CHECK(pj == j);
                }
                ++linear;
            }
        CHECK_THROWS_AS(parallel::pair_from_linear(m, m * (m - 1) / 2), ConfigError);
        CHECK_THROWS_AS(parallel::pair_from_linear(m, -1), ConfigError);
    }
}

TEST_CASE("run with one worker equals a sequential map") {
    const auto plan = parallel::plan_frames(37, 5);
    auto fn = [](parallel::ChunkRange c) {
        std::vector<std::int64_t> v;
        for (std::int64_t i = c.begin; i < c.end; ++i) v.push_back(i * i);
        return v;
    };
    const auto got = parallel::run(plan, fn, 1);
    REQUIRE(got.size() == plan.chunks.size());
    for (std::size_t c = 0; c < got.size(); ++c) {
        const auto expect = fn(plan.chunks[c]);
        CHECK(got[c] == expect);
    }
}

TEST_CASE("run gathers identical results for 1, 2 and 8 workers") {
    Rng rng(99);
    std::vector<double> data(512);
    for (auto& x : data) x = rng.gaussian();
    const auto plan = parallel::plan_frames(512, 19);
    auto fn = [&](parallel::ChunkRange c) {
        double acc = 0.0;
        for (std::int64_t i = c.begin; i < c.end; ++i) acc += data[static_cast<std::size_t>(i)] * i;
        return acc;
    };
    const auto r1 = parallel::run(plan, fn, 1);
    const auto r2 = parallel::run(plan, fn, 2);
    const auto r8 = parallel::run(plan, fn, 8);
    CHECK(r1 == r2);  // bitwise: same chunks, same arithmetic
    CHECK(r1 == r8);
}

TEST_CASE("a failing task surfaces its chunk id and poisons the whole run") {
    const auto plan = parallel::plan_frames(40, 4);  // chunk 7 = [28, 32)
    auto fn = [](parallel::ChunkRange c) {
        if (c.begin == 28) throw DataError("synthetic failure");
        return c.size();
    };
    CHECK_THROWS_WITH_AS(parallel::run(plan, fn, 1), doctest::Contains("[chunk 7]"), DataError);
    CHECK_THROWS_WITH_AS(parallel::run(plan, fn, 4), doctest::Contains("synthetic failure"),
                         DataError);
    // error classes survive the annotation
    auto numeric = [](parallel::ChunkRange c) -> int {
        throw NumericalError("chunk " + std::to_string(c.begin));
    };
    CHECK_THROWS_AS(parallel::run(parallel::plan_frames(4, 2), numeric, 2), NumericalError);
}

TEST_CASE("run on an empty plan returns an empty gather") {
    parallel::TaskPlan plan;  // no chunks
    const auto got = parallel::run(plan, [](parallel::ChunkRange) { return 1; }, 4);
    CHECK(got.empty());
}
