#include "mtk/clustering.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mtk/rng.hpp"

namespace mtk {

namespace {

Eigen::SelfAdjointEigenSolver<MatX> laplacian_eigs(const AffinityMatrix& affinity) {
    const MatX& S = affinity.S;
    const std::int64_t m = S.rows();
    if (m < 1 || S.cols() != m) throw DataError("affinity matrix must be square and nonempty");
    if ((S - S.transpose()).norm() > 1e-9 * std::max(1.0, S.norm()))
        throw DataError("affinity matrix must be symmetric");

    VecX degree = S.rowwise().sum();
    for (std::int64_t i = 0; i < m; ++i)
        if (degree(i) <= 0.0)
            throw DataError("trajectory " + std::to_string(i) +
                            " has zero affinity degree; cannot normalize the Laplacian");

    const VecX inv_sqrt = degree.cwiseSqrt().cwiseInverse();
    MatX normalized = inv_sqrt.asDiagonal() * S * inv_sqrt.asDiagonal();
    MatX lap = MatX::Identity(m, m) - normalized;
    lap = ((lap + lap.transpose()) * 0.5).eval();

    Eigen::SelfAdjointEigenSolver<MatX> es(lap);
    if (es.info() != Eigen::Success)
        throw NumericalError("Laplacian eigendecomposition failed to converge");
    return es;
}

}  // namespace

Embedding spectral_embed(const AffinityMatrix& affinity, std::int64_t k) {
    const std::int64_t m = affinity.S.rows();
    if (k < 1) throw ConfigError("embedding dimension k must be >= 1");
    if (k > m)
        throw DataError("embedding dimension " + std::to_string(k) + " exceeds trajectory count " +
                        std::to_string(m));

    const auto es = laplacian_eigs(affinity);
    Embedding embedding;
    embedding.eigenvalues = es.eigenvalues();
    embedding.U = es.eigenvectors().leftCols(k);
    for (std::int64_t i = 0; i < m; ++i) {
        const double norm = embedding.U.row(i).norm();
        if (norm > 0.0) embedding.U.row(i) /= norm;
    }
    return embedding;
}

ClusterResult kmeans(const MatX& points, std::int64_t k, std::uint64_t seed) {
    const std::int64_t m = points.rows(), dim = points.cols();
    if (k < 1) throw ConfigError("k must be >= 1");
    if (k > m)
        throw DataError("k = " + std::to_string(k) + " exceeds point count " + std::to_string(m));

    constexpr int kRestarts = 10;
    constexpr int kMaxIter = 300;
    constexpr double kTol = 1e-8;

    Rng rng(seed);
    ClusterResult best;
    best.inertia = std::numeric_limits<double>::infinity();

    std::vector<std::int64_t> labels(static_cast<std::size_t>(m), 0);
    VecX dist_sq(m);

    for (int restart = 0; restart < kRestarts; ++restart) {
        // k-means++ seeding
        MatX centers(k, dim);
        centers.row(0) = points.row(rng.uniform_int(0, m - 1));
        dist_sq = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
        for (std::int64_t c = 1; c < k; ++c) {
            const double total = dist_sq.sum();
            std::int64_t chosen = -1;
            if (total > 0.0) {
                double r = rng.uniform01() * total;
                for (std::int64_t i = 0; i < m; ++i) {
                    r -= dist_sq(i);
                    if (r <= 0.0) {
                        chosen = i;
                        break;
                    }
                }
                if (chosen < 0) chosen = m - 1;  // guard against rounding spill
            } else {
                // all remaining points coincide with a center; pick the first
                chosen = 0;
            }
            centers.row(c) = points.row(chosen);
            dist_sq = dist_sq.cwiseMin(
                (points.rowwise() - centers.row(c)).rowwise().squaredNorm());
        }

        // Lloyd iterations
        double inertia = std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < kMaxIter; ++iter) {
            double new_inertia = 0.0;
            for (std::int64_t i = 0; i < m; ++i) {
                double best_d = std::numeric_limits<double>::infinity();
                std::int64_t best_c = 0;
                for (std::int64_t c = 0; c < k; ++c) {
                    const double d = (points.row(i) - centers.row(c)).squaredNorm();
                    if (d < best_d) {
                        best_d = d;
                        best_c = c;
                    }
                }
                labels[static_cast<std::size_t>(i)] = best_c;
                new_inertia += best_d;
            }

            MatX sums = MatX::Zero(k, dim);
            std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
            for (std::int64_t i = 0; i < m; ++i) {
                sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
                ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
            }
            for (std::int64_t c = 0; c < k; ++c) {
                if (counts[static_cast<std::size_t>(c)] > 0) {
                    centers.row(c) = sums.row(c) / double(counts[static_cast<std::size_t>(c)]);
                } else {
                    // re-seed an empty cluster at the point farthest from its center
                    std::int64_t far = 0;
                    double far_d = -1.0;
                    for (std::int64_t i = 0; i < m; ++i) {
                        const double d =
                            (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)]))
                                .squaredNorm();
                        if (d > far_d) {
                            far_d = d;
                            far = i;
                        }
                    }
                    centers.row(c) = points.row(far);
                    labels[static_cast<std::size_t>(far)] = c;
                }
            }

            if (std::isfinite(inertia) &&
                std::abs(inertia - new_inertia) <= kTol * std::max(inertia, 1e-300)) {
                inertia = new_inertia;
                break;
            }
            inertia = new_inertia;
        }

        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.labels = labels;
            best.centers = centers;
            best.k = k;
        }
    }
    return best;
}

std::int64_t eigengap_k(const AffinityMatrix& affinity, std::int64_t k_max) {
    if (k_max < 2) throw ConfigError("eigengap selection requires k_max >= 2");
    const auto es = laplacian_eigs(affinity);
    const VecX& ev = es.eigenvalues();
    const std::int64_t m = ev.size();
    const std::int64_t upper = std::min(k_max, m - 1);
    if (upper < 1) return 1;

    std::int64_t best_k = 1;
    double best_gap = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 1; i <= upper; ++i) {
        const double gap = ev(i) - ev(i - 1);
        if (gap > best_gap) {
            best_gap = gap;
            best_k = i;
        }
    }
    return best_k;
}

ClusterResult cluster_trajectories(const AffinityMatrix& affinity, std::int64_t k,
                                   std::uint64_t seed) {
    const Embedding embedding = spectral_embed(affinity, k);
    return kmeans(embedding.U, k, seed);
}

double adjusted_rand_index(const std::vector<std::int64_t>& a,
                           const std::vector<std::int64_t>& b) {
    if (a.size() != b.size()) throw DataError("label vectors must have equal length");
    const std::size_t n = a.size();
    if (n < 2) return 1.0;

    std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> joint;
    std::map<std::int64_t, std::int64_t> rows, cols;
    for (std::size_t i = 0; i < n; ++i) {
        ++joint[{a[i], b[i]}];
        ++rows[a[i]];
        ++cols[b[i]];
    }
    auto choose2 = [](std::int64_t c) { return double(c) * double(c - 1) / 2.0; };
    double sum_joint = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, c] : joint) sum_joint += choose2(c);
    for (const auto& [key, c] : rows) sum_rows += choose2(c);
    for (const auto& [key, c] : cols) sum_cols += choose2(c);
    const double total = choose2(static_cast<std::int64_t>(n));
    const double expected = sum_rows * sum_cols / total;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;  // both partitions trivial
    return (sum_joint - expected) / (max_index - expected);
}

}  // namespace mtk
