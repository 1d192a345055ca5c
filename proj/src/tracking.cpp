#include "mtk/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mtk {

void TrackParams::validate() const {
    if (gate_radius <= 0.0) throw ConfigError("gate radius must be > 0");
    if (target_length < 1) throw ConfigError("target length must be >= 1");
    if (min_length > target_length)
        throw ConfigError("min length (" + std::to_string(min_length) +
                          ") must not exceed target length (" + std::to_string(target_length) +
                          ")");
}

namespace {

// Shortest augmenting path with dual potentials; requires rows <= cols.
// col_row[j] = row assigned to column j, or -1.
std::vector<std::int64_t> solve_assignment(const MatX& a) {
    const std::int64_t n = a.rows(), m = a.cols();
    constexpr double kInf = std::numeric_limits<double>::infinity();

    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::int64_t> p(m + 1, 0), way(m + 1, 0);  // 1-indexed, 0 = free
    for (std::int64_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::int64_t j0 = 0;
        std::vector<double> minv(m + 1, kInf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::int64_t i0 = p[j0];
            double delta = kInf;
            std::int64_t j1 = 0;
            for (std::int64_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::int64_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::int64_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::int64_t> col_row(m, -1);
    for (std::int64_t j = 1; j <= m; ++j)
        if (p[j] != 0) col_row[j - 1] = p[j] - 1;
    return col_row;
}

}  // namespace

Assignment hungarian(const MatX& cost) {
    if (cost.rows() < 1 || cost.cols() < 1) throw DataError("empty cost matrix");
    for (std::int64_t i = 0; i < cost.rows(); ++i)
        for (std::int64_t j = 0; j < cost.cols(); ++j)
            if (!std::isfinite(cost(i, j)) || cost(i, j) < 0.0)
                throw DataError("cost matrix entries must be finite and nonnegative (entry " +
                                std::to_string(i) + "," + std::to_string(j) + ")");

    Assignment result;
    if (cost.rows() <= cost.cols()) {
        const auto col_row = solve_assignment(cost);
        for (std::int64_t j = 0; j < cost.cols(); ++j)
            if (col_row[j] >= 0) result.pairs.emplace_back(col_row[j], j);
    } else {
        const MatX t = cost.transpose();
        const auto col_row = solve_assignment(t);
        for (std::int64_t j = 0; j < t.cols(); ++j)
            if (col_row[j] >= 0) result.pairs.emplace_back(j, col_row[j]);
    }
    std::sort(result.pairs.begin(), result.pairs.end());
    for (const auto& [r, c] : result.pairs) result.total_cost += cost(r, c);
    return result;
}

LinkResult link_frames(const std::vector<Detection3D>& prev,
                       const std::vector<Detection3D>& next, const TrackParams& params) {
    params.validate();
    LinkResult result;
    if (prev.empty() || next.empty()) {
        for (std::size_t j = 0; j < next.size(); ++j) result.births.push_back(j);
        for (std::size_t i = 0; i < prev.size(); ++i) result.deaths.push_back(i);
        return result;
    }

    MatX cost(prev.size(), next.size());
    for (std::size_t i = 0; i < prev.size(); ++i)
        for (std::size_t j = 0; j < next.size(); ++j)
            cost(i, j) = (prev[i].center - next[j].center).norm();

    const Assignment assignment = hungarian(cost);
    std::vector<char> prev_used(prev.size(), 0), next_used(next.size(), 0);
    for (const auto& [i, j] : assignment.pairs) {
        if (cost(i, j) > params.gate_radius) continue;  // severed
        result.matches.emplace_back(std::size_t(i), std::size_t(j));
        prev_used[i] = 1;
        next_used[j] = 1;
    }
    for (std::size_t j = 0; j < next.size(); ++j)
        if (!next_used[j]) result.births.push_back(j);
    for (std::size_t i = 0; i < prev.size(); ++i)
        if (!prev_used[i]) result.deaths.push_back(i);
    return result;
}

std::vector<Track> build_tracks(const std::vector<std::vector<Detection3D>>& frames,
                                const TrackParams& params) {
    params.validate();
    std::vector<Track> tracks;
    std::vector<std::int64_t> active;  // detection index in current frame -> track index

    auto open_track = [&](std::int64_t t, const Detection3D& det) {
        Track track;
        track.id = static_cast<std::int64_t>(tracks.size());
        track.points.push_back({t, det.center.x(), det.center.y(), det.center.z()});
        tracks.push_back(std::move(track));
        return static_cast<std::int64_t>(tracks.size() - 1);
    };

    for (std::size_t t = 0; t < frames.size(); ++t) {
        const auto& dets = frames[t];
        std::vector<std::int64_t> next_active(dets.size(), -1);
        if (t == 0) {
            for (std::size_t j = 0; j < dets.size(); ++j)
                next_active[j] = open_track(0, dets[j]);
        } else {
            const LinkResult link = link_frames(frames[t - 1], dets, params);
            for (const auto& [i, j] : link.matches) {
                const std::int64_t ti = active[i];
                tracks[ti].points.push_back(
                    {std::int64_t(t), dets[j].center.x(), dets[j].center.y(), dets[j].center.z()});
                next_active[j] = ti;
            }
            for (std::size_t i : link.deaths) tracks[active[i]].status = TrackStatus::terminated;
            for (std::size_t j : link.births) next_active[j] = open_track(std::int64_t(t), dets[j]);
        }
        active = std::move(next_active);
    }
    return tracks;
}

TrajectoryCorpus normalize_corpus(const std::vector<Track>& tracks, const TrackParams& params) {
    params.validate();
    const std::int64_t L = params.target_length;
    const std::int64_t cutoff = std::max(params.min_length, L);

    std::vector<const Track*> kept;
    for (const auto& track : tracks)
        if (static_cast<std::int64_t>(track.points.size()) >= cutoff) kept.push_back(&track);
    if (kept.empty())
        throw DataError("empty corpus: no track reached " + std::to_string(cutoff) + " frames");
    std::sort(kept.begin(), kept.end(),
              [](const Track* a, const Track* b) { return a->id < b->id; });

    TrajectoryCorpus corpus;
    const std::int64_t m = static_cast<std::int64_t>(kept.size());
    corpus.X.resize(m, L);
    corpus.Y.resize(m, L);
    corpus.Z.resize(m, L);
    corpus.track_ids.reserve(kept.size());
    for (std::int64_t i = 0; i < m; ++i) {
        corpus.track_ids.push_back(kept[i]->id);
        for (std::int64_t t = 0; t < L; ++t) {
            const TrackPoint& p = kept[i]->points[static_cast<std::size_t>(t)];
            corpus.X(i, t) = p.x;
            corpus.Y(i, t) = p.y;
            corpus.Z(i, t) = p.z;
        }
    }
    return corpus;
}

}  // namespace mtk
