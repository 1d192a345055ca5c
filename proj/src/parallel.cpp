#include "mtk/parallel.hpp"

#include <stdexcept>

namespace mtk::parallel {

TaskPlan plan_frames(std::int64_t count, std::int64_t chunk_size) {
    if (count < 1) throw ConfigError("plan_frames requires count >= 1");
    if (chunk_size < 1) throw ConfigError("plan_frames requires chunk_size >= 1");
    TaskPlan plan;
    plan.total = count;
    for (std::int64_t begin = 0; begin < count; begin += chunk_size)
        plan.chunks.push_back({begin, std::min(begin + chunk_size, count)});
    return plan;
}

TaskPlan plan_pairs(std::int64_t m, std::int64_t tile_size) {
    if (m < 2) throw ConfigError("plan_pairs requires m >= 2");
    if (tile_size < 1) throw ConfigError("plan_pairs requires tile_size >= 1");
    TaskPlan plan;
    plan.total = m * (m - 1) / 2;
    for (std::int64_t begin = 0; begin < plan.total; begin += tile_size)
        plan.chunks.push_back({begin, std::min(begin + tile_size, plan.total)});
    return plan;
}

std::pair<std::int64_t, std::int64_t> pair_from_linear(std::int64_t m, std::int64_t linear) {
    const std::int64_t total = m * (m - 1) / 2;
    if (linear < 0 || linear >= total)
        throw ConfigError("pair index " + std::to_string(linear) + " out of range for m=" +
                          std::to_string(m));
    // pairs with first index < i occupy the first i*(2m - i - 1)/2 slots
    std::int64_t lo = 0, hi = m - 1;
    while (lo < hi) {
        const std::int64_t mid = (lo + hi + 1) / 2;
        if (mid * (2 * m - mid - 1) / 2 <= linear)
            lo = mid;
        else
            hi = mid - 1;
    }
    const std::int64_t i = lo;
    const std::int64_t j = i + 1 + (linear - i * (2 * m - i - 1) / 2);
    return {i, j};
}

namespace detail {

void rethrow_annotated(std::exception_ptr ep, std::int64_t chunk_index) {
    const std::string tag = "[chunk " + std::to_string(chunk_index) + "] ";
    try {
        std::rethrow_exception(ep);
    } catch (const ConfigError& e) {
        throw ConfigError(tag + e.what());
    } catch (const DataError& e) {
        throw DataError(tag + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(tag + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(tag + e.what());
    }
}

}  // namespace detail

}  // namespace mtk::parallel
