#pragma once

#include <cstdint>
#include <vector>

#include "mtk/common.hpp"
#include "mtk/tracking.hpp"

namespace mtk {

// Shared linear map from 3D positions to the latent space (all trajectories
// use the same projection and centering vector).
struct ProjectionMatrix {
    MatX C;     // p×n, orthonormal columns
    VecX mean;  // length p
    std::int64_t p() const { return C.rows(); }
    std::int64_t n() const { return C.cols(); }
};

// One trajectory's hidden states, one column per frame.
struct LatentTrajectory {
    MatX H;  // n×L
};

// Order-d vector autoregression h_t = B1 h_{t-1} + … + Bd h_{t-d} + v_t.
struct ARModel {
    std::vector<MatX> B;        // d matrices, each n×n
    double residual_rms = 0.0;  // RMS of v_t over the fitted rows
    std::int64_t trajectory_id = -1;
    std::int64_t n() const { return B.empty() ? 0 : B.front().rows(); }
    std::int64_t d() const { return static_cast<std::int64_t>(B.size()); }
};

// First-order lifting of an ARModel: state s_t = [h_t; …; h_{t-d+1}].
struct StateSpace {
    MatX A;   // q×q companion matrix, q = n·d
    MatX Cs;  // p×q observation matrix [C | 0]
    std::int64_t trajectory_id = -1;
    std::int64_t q() const { return A.rows(); }
};

/// PCA over all m·L corpus positions pooled as 3-vectors: subtract the pooled
/// mean and keep the top-n right singular directions. Each column's
/// largest-magnitude entry is made positive so the fit is deterministic.
/// Pooled rank < n raises an error naming the rank.
ProjectionMatrix fit_projection(const TrajectoryCorpus& corpus, std::int64_t n = 2);

/// h_t = Cᵀ(r_t − mean) for each frame of corpus row `row`.
LatentTrajectory project(const TrajectoryCorpus& corpus, std::int64_t row,
                         const ProjectionMatrix& projection);

/// Joint least-squares fit of [B1 … Bd] over t = d..L−1, minimum-norm on
/// rank deficiency. Requires L ≥ d + n·d + 1.
ARModel fit_ar(const LatentTrajectory& latent, std::int64_t d,
               std::int64_t trajectory_id = -1);

/// A = [[B1 … Bd]; [I 0 …]; …], Cs = [C | 0].
StateSpace companion_form(const ARModel& model, const ProjectionMatrix& projection);

}  // namespace mtk
