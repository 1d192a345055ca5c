#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "mtk/clustering.hpp"
#include "mtk/rng.hpp"
#include "oracle_helpers.hpp"

using namespace mtk;

namespace {

// Block-constant affinity: S = 1 within a block, `cross` across blocks.
AffinityMatrix block_affinity(const std::vector<std::int64_t>& sizes, double cross = 0.0) {
    const std::int64_t m = std::accumulate(sizes.begin(), sizes.end(), std::int64_t(0));
    std::vector<std::int64_t> label;
    for (std::size_t b = 0; b < sizes.size(); ++b)
        label.insert(label.end(), std::size_t(sizes[b]), std::int64_t(b));
    AffinityMatrix s;
    s.S = MatX::Constant(m, m, cross);
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < m; ++j)
            if (label[std::size_t(i)] == label[std::size_t(j)]) s.S(i, j) = 1.0;
    return s;
}

const std::vector<std::int64_t> kThreeBlockTruth{0, 0, 0, 1, 1, 1, 2, 2, 2, 2};

}  // namespace

TEST_CASE("three all-ones blocks produce the textbook Laplacian spectrum") {
    const AffinityMatrix s = block_affinity({3, 3, 4});
    const Embedding emb = spectral_embed(s, 3);
    REQUIRE(emb.eigenvalues.size() == 10);
    // one zero eigenvalue per connected component, then a jump to 1
    for (int i = 0; i < 3; ++i) CHECK(std::abs(emb.eigenvalues(i)) < 1e-9);
    for (int i = 3; i < 10; ++i) CHECK(emb.eigenvalues(i) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(eigengap_k(s, 8) == 3);
}

TEST_CASE("embedding rows coincide within blocks and separate across them") {
    const AffinityMatrix s = block_affinity({3, 3, 4});
    const Embedding emb = spectral_embed(s, 3);
    REQUIRE(emb.U.rows() == 10);
    REQUIRE(emb.U.cols() == 3);
    for (std::int64_t i = 0; i < 10; ++i)
        CHECK(emb.U.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (std::int64_t i = 0; i < 10; ++i)
        for (std::int64_t j = i + 1; j < 10; ++j) {
            const double gap = (emb.U.row(i) - emb.U.row(j)).norm();
            if (kThreeBlockTruth[std::size_t(i)] == kThreeBlockTruth[std::size_t(j)])
                CHECK(gap < 1e-9);
            else
                CHECK(gap > 0.5);
        }
}

TEST_CASE("clustering the three-block affinity recovers the partition exactly") {
    const AffinityMatrix s = block_affinity({3, 3, 4});
    const ClusterResult result = cluster_trajectories(s, eigengap_k(s, 8), 1);
    REQUIRE(result.labels.size() == 10);
    CHECK(result.k == 3);
    CHECK(adjusted_rand_index(result.labels, kThreeBlockTruth) == 1.0);
    CHECK(oracle::pair_counting_ari(result.labels, kThreeBlockTruth) == doctest::Approx(1.0));
    CHECK(result.inertia < 1e-18);
}

TEST_CASE("two components give a zero eigenvalue of multiplicity two") {
    const AffinityMatrix s = block_affinity({4, 3});
    const Embedding emb = spectral_embed(s, 2);
    CHECK(std::abs(emb.eigenvalues(0)) <= 1e-9);
    CHECK(std::abs(emb.eigenvalues(1)) <= 1e-9);
    CHECK(emb.eigenvalues(2) > 0.5);
    CHECK(eigengap_k(s, 6) == 2);
}

TEST_CASE("a single all-ones block suggests one cluster") {
    const AffinityMatrix s = block_affinity({4});
    CHECK(eigengap_k(s, 3) == 1);
}

TEST_CASE("weak cross-block affinity still yields the right k") {
    const AffinityMatrix s = block_affinity({3, 3, 4}, 0.05);
    CHECK(eigengap_k(s, 8) == 3);
    const ClusterResult result = cluster_trajectories(s, 3, 7);
    CHECK(adjusted_rand_index(result.labels, kThreeBlockTruth) == 1.0);
}

TEST_CASE("eigengap needs room for at least two clusters") {
    const AffinityMatrix s = block_affinity({3, 3});
    CHECK_THROWS_AS(eigengap_k(s, 1), ConfigError);
    CHECK_THROWS_AS(eigengap_k(s, 0), ConfigError);
}

TEST_CASE("Laplacian eigenvalues live in [0, 2]") {
    Rng rng(12);
    const std::int64_t m = 12;
    AffinityMatrix s;
    s.S = MatX::Zero(m, m);
    for (std::int64_t i = 0; i < m; ++i) {
        s.S(i, i) = 1.0;
        for (std::int64_t j = i + 1; j < m; ++j) s.S(i, j) = s.S(j, i) = rng.uniform(0.01, 1.0);
    }
    const Embedding emb = spectral_embed(s, 3);
    CHECK(emb.eigenvalues.minCoeff() >= -1e-9);
    CHECK(emb.eigenvalues.maxCoeff() <= 2.0 + 1e-9);
    for (std::int64_t i = 1; i < m; ++i)
        CHECK(emb.eigenvalues(i) >= emb.eigenvalues(i - 1) - 1e-12);  // ascending
}

TEST_CASE("spectral embedding validates its arguments") {
    const AffinityMatrix s = block_affinity({3, 3});
    CHECK_THROWS_AS(spectral_embed(s, 0), ConfigError);
    CHECK_THROWS_AS(spectral_embed(s, 7), DataError);  // k > m
    AffinityMatrix rect;
    rect.S = MatX::Ones(2, 3);
    CHECK_THROWS_AS(spectral_embed(rect, 1), DataError);
    AffinityMatrix asym;
    asym.S = MatX::Ones(3, 3);
    asym.S(0, 1) = 0.5;
    CHECK_THROWS_AS(spectral_embed(asym, 1), DataError);
}

TEST_CASE("a trajectory with zero affinity degree is named in the error") {
    AffinityMatrix s = block_affinity({3, 2});
    s.S.row(4).setZero();
    s.S.col(4).setZero();
    CHECK_THROWS_WITH_AS(spectral_embed(s, 2), doctest::Contains("trajectory 4"), DataError);
}

TEST_CASE("kmeans with one cluster returns the centroid and total scatter") {
    Rng rng(9);
    MatX pts(20, 3);
    for (std::int64_t i = 0; i < 20; ++i)
        for (int j = 0; j < 3; ++j) pts(i, j) = rng.uniform(-4.0, 4.0);
    const ClusterResult result = kmeans(pts, 1, 11);
    CHECK(result.k == 1);
    CHECK(std::all_of(result.labels.begin(), result.labels.end(),
                      [](std::int64_t l) { return l == 0; }));
    const VecX mean = pts.colwise().mean().transpose();
    CHECK((result.centers.row(0).transpose() - mean).norm() < 1e-12);
    const double scatter = (pts.rowwise() - mean.transpose()).squaredNorm();
    CHECK(result.inertia == doctest::Approx(scatter).epsilon(1e-12));
}

TEST_CASE("kmeans with k = m puts every distinct point in its own cluster") {
    MatX pts(5, 2);
    pts << 0, 0, 1, 0, 0, 1, 1, 1, 0.5, 3.0;
    const ClusterResult result = kmeans(pts, 5, 2);
    CHECK(result.inertia == doctest::Approx(0.0));
    std::set<std::int64_t> seen(result.labels.begin(), result.labels.end());
    CHECK(seen.size() == 5);
}

TEST_CASE("kmeans separates well-spaced Gaussian blobs") {
    Rng rng(33);
    const std::vector<std::pair<double, double>> centers{{0, 0}, {1, 0}, {0, 1}};
    MatX pts(30, 2);
    std::vector<std::int64_t> truth(30);
    for (std::int64_t i = 0; i < 30; ++i) {
        const auto [cx, cy] = centers[std::size_t(i) % 3];
        truth[std::size_t(i)] = std::int64_t(i % 3);
        pts(i, 0) = cx + 0.05 * rng.gaussian();
        pts(i, 1) = cy + 0.05 * rng.gaussian();
    }
    const ClusterResult result = kmeans(pts, 3, 5);
    CHECK(adjusted_rand_index(result.labels, truth) == 1.0);
    CHECK(result.centers.rows() == 3);
    // each center sits on one of the true blob centers
    for (int c = 0; c < 3; ++c) {
        double best = 1e30;
        for (const auto& [cx, cy] : centers)
            best = std::min(best, std::hypot(result.centers(c, 0) - cx,
                                             result.centers(c, 1) - cy));
        CHECK(best < 0.05);
    }
}

TEST_CASE("kmeans argument validation") {
    MatX pts = MatX::Zero(3, 2);
    CHECK_THROWS_AS(kmeans(pts, 0, 1), ConfigError);
    CHECK_THROWS_AS(kmeans(pts, 4, 1), DataError);
}

TEST_CASE("kmeans is deterministic in the seed") {
    Rng rng(44);
    MatX pts(24, 2);
    for (std::int64_t i = 0; i < 24; ++i)
        for (int j = 0; j < 2; ++j) pts(i, j) = rng.uniform(0.0, 10.0);
    const ClusterResult a = kmeans(pts, 4, 123);
    const ClusterResult b = kmeans(pts, 4, 123);
    CHECK(a.labels == b.labels);
    CHECK(a.inertia == b.inertia);
    CHECK((a.centers - b.centers).norm() == 0.0);
}

TEST_CASE("relabeling the input permutes the output labels with it") {
    const AffinityMatrix s = block_affinity({3, 3, 4}, 0.02);
    const ClusterResult base = cluster_trajectories(s, 3, 17);

    // reverse the trajectory order
    const std::int64_t m = s.S.rows();
    std::vector<std::int64_t> perm(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) perm[std::size_t(i)] = m - 1 - i;
    AffinityMatrix shuffled;
    shuffled.S = MatX::Zero(m, m);
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < m; ++j)
            shuffled.S(i, j) = s.S(perm[std::size_t(i)], perm[std::size_t(j)]);
    const ClusterResult moved = cluster_trajectories(shuffled, 3, 17);

    std::vector<std::int64_t> unshuffled(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i)
        unshuffled[std::size_t(perm[std::size_t(i)])] = moved.labels[std::size_t(i)];
    CHECK(adjusted_rand_index(unshuffled, base.labels) == 1.0);
}

TEST_CASE("indistinguishable trajectories get the same label") {
    // rows 0 and 1 of the distance matrix are identical (distance 0 apart),
    // so no deterministic clustering may split them
    const std::int64_t m = 6;
    DistanceMatrix d;
    d.M = MatX::Zero(m, m);
    const std::vector<std::int64_t> group{0, 0, 0, 1, 1, 1};
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < m; ++j) {
            if (i == j) continue;
            d.M(i, j) = (group[std::size_t(i)] == group[std::size_t(j)]) ? 0.1 : 5.0;
        }
    d.M(0, 1) = d.M(1, 0) = 0.0;  // exact duplicates
    const AffinityMatrix s = heat_kernel(d, 1.0);
    const ClusterResult result = cluster_trajectories(s, 2, 3);
    CHECK(result.labels[0] == result.labels[1]);
    CHECK(adjusted_rand_index(result.labels, group) == 1.0);
}

TEST_CASE("adjusted Rand index hand values") {
    CHECK(adjusted_rand_index({0, 1, 2}, {0, 1, 2}) == 1.0);
    CHECK(adjusted_rand_index({0, 0, 1, 1}, {1, 1, 0, 0}) == 1.0);  // permuted labels
    CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5));
    // Hubert–Arabie worked example: ARI = 0.8/3.3
    CHECK(adjusted_rand_index({0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 2, 2}) ==
          doctest::Approx(0.8 / 3.3).epsilon(1e-12));
    CHECK(adjusted_rand_index({0}, {0}) == 1.0);  // degenerate: too few pairs
    CHECK(adjusted_rand_index({0, 0, 0}, {1, 1, 1}) == 1.0);  // both single-cluster
}

TEST_CASE("adjusted Rand index agrees with pair counting on random labelings") {
    Rng rng(81);
    for (int rep = 0; rep < 30; ++rep) {
        const std::int64_t n = rng.uniform_int(2, 40);
        std::vector<std::int64_t> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) {
            a[std::size_t(i)] = rng.uniform_int(0, 3);
            b[std::size_t(i)] = rng.uniform_int(0, 3);
        }
        CHECK(adjusted_rand_index(a, b) ==
              doctest::Approx(oracle::pair_counting_ari(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("adjusted Rand index rejects mismatched lengths") {
    CHECK_THROWS_AS(adjusted_rand_index({0, 1}, {0, 1, 2}), DataError);
}
