#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mtk/common.hpp"
#include "mtk/detection.hpp"

namespace mtk {

// Minimum-cost bipartite matching of min(R, C) pairs.
struct Assignment {
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;  // (row, col)
    double total_cost = 0.0;
};

struct TrackParams {
    double gate_radius = 12.0;       // matches farther than this are severed
    std::int64_t min_length = 61;    // shorter tracks are discarded
    std::int64_t target_length = 61; // corpus row length L; longer tracks truncated

    void validate() const;
};

enum class TrackStatus { active, terminated };

struct TrackPoint {
    std::int64_t t = 0;
    double x = 0.0, y = 0.0, z = 0.0;
};

struct Track {
    std::int64_t id = 0;
    std::vector<TrackPoint> points;  // t strictly increasing by 1
    TrackStatus status = TrackStatus::active;
};

// Outcome of linking one frame pair; indices refer to the input lists.
struct LinkResult {
    std::vector<std::pair<std::size_t, std::size_t>> matches;  // (prev idx, next idx)
    std::vector<std::size_t> births;                           // unmatched next
    std::vector<std::size_t> deaths;                           // unmatched prev
};

// Fixed-length coordinate matrices: row i of X/Y/Z holds one trajectory.
struct TrajectoryCorpus {
    MatX X, Y, Z;                        // each m×L
    std::vector<std::int64_t> track_ids; // row -> originating track id
    std::int64_t m() const { return X.rows(); }
    std::int64_t length() const { return X.cols(); }
};

/// Jonker–Volgenant style shortest-augmenting-path assignment, O(n^3).
/// Rectangular matrices are handled by solving along the shorter side.
Assignment hungarian(const MatX& cost);

/// Assign prev→next detections by 3D Euclidean distance, then sever matched
/// pairs whose distance exceeds gate_radius strictly.
LinkResult link_frames(const std::vector<Detection3D>& prev,
                       const std::vector<Detection3D>& next, const TrackParams& params);

/// Fold link_frames over consecutive frames. Births open tracks (ids in
/// creation order), deaths terminate them; no re-identification across gaps.
std::vector<Track> build_tracks(const std::vector<std::vector<Detection3D>>& frames,
                                const TrackParams& params);

/// Drop tracks shorter than max(min_length, target_length), truncate the rest
/// to their first target_length points, and pack rows in track-id order.
TrajectoryCorpus normalize_corpus(const std::vector<Track>& tracks, const TrackParams& params);

}  // namespace mtk
