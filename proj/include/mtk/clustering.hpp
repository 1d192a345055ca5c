#pragma once

#include <cstdint>
#include <vector>

#include "mtk/common.hpp"
#include "mtk/similarity.hpp"

namespace mtk {

// Rows of U are the spectral coordinates of the trajectories.
struct Embedding {
    MatX U;            // m×k, row-normalized (zero rows left as zero)
    VecX eigenvalues;  // all m Laplacian eigenvalues, ascending
};

struct ClusterResult {
    std::vector<std::int64_t> labels;  // length m, values in [0, k)
    MatX centers;                      // k × embedding-dim
    double inertia = 0.0;
    std::int64_t k = 0;
};

/// Normalized-Laplacian embedding: L_sym = I − D^{−1/2} S D^{−1/2}, take the
/// eigenvectors of the k smallest eigenvalues, row-normalize to unit length.
Embedding spectral_embed(const AffinityMatrix& affinity, std::int64_t k);

/// Seeded k-means++ with Lloyd iterations (relative inertia change < 1e-8 or
/// 300 iterations), best of 10 restarts by inertia. Deterministic given seed.
ClusterResult kmeans(const MatX& points, std::int64_t k, std::uint64_t seed);

/// Eigengap heuristic: with ascending Laplacian eigenvalues λ₁ ≤ λ₂ ≤ …,
/// suggest k = argmax over 1 ≤ i ≤ k_max of (λ_{i+1} − λ_i).
std::int64_t eigengap_k(const AffinityMatrix& affinity, std::int64_t k_max);

/// spectral_embed then kmeans.
ClusterResult cluster_trajectories(const AffinityMatrix& affinity, std::int64_t k,
                                   std::uint64_t seed);

/// Adjusted Rand index between two labelings of the same points; 1.0 means
/// identical partitions up to label permutation.
double adjusted_rand_index(const std::vector<std::int64_t>& a,
                           const std::vector<std::int64_t>& b);

}  // namespace mtk
