#include "mtk/dynamics.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace mtk {

ProjectionMatrix fit_projection(const TrajectoryCorpus& corpus, std::int64_t n) {
    const std::int64_t m = corpus.m(), L = corpus.length();
    if (m < 1 || L < 2) throw DataError("projection fit needs m >= 1 and L >= 2");
    if (n < 1 || n > 3) throw ConfigError("latent dimension must be 1..3");

    MatX pooled(m * L, 3);
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t t = 0; t < L; ++t) {
            pooled(i * L + t, 0) = corpus.X(i, t);
            pooled(i * L + t, 1) = corpus.Y(i, t);
            pooled(i * L + t, 2) = corpus.Z(i, t);
        }
    }
    const VecX mean = pooled.colwise().mean();
    pooled.rowwise() -= mean.transpose();

    Eigen::JacobiSVD<MatX> svd(pooled, Eigen::ComputeThinV);
    const VecX sv = svd.singularValues();
    std::int64_t rank = 0;
    for (std::int64_t i = 0; i < sv.size(); ++i)
        if (sv(i) > sv(0) * 1e-10) ++rank;
    if (rank < n)
        throw NumericalError("pooled position covariance has rank " + std::to_string(rank) +
                             " < latent dimension " + std::to_string(n) +
                             "; trajectories are degenerate");

    ProjectionMatrix proj;
    proj.C = svd.matrixV().leftCols(n);
    proj.mean = mean;
    // sign convention: largest-magnitude entry of each column positive
    for (std::int64_t j = 0; j < n; ++j) {
        std::int64_t arg = 0;
        proj.C.col(j).cwiseAbs().maxCoeff(&arg);
        if (proj.C(arg, j) < 0.0) proj.C.col(j) = -proj.C.col(j);
    }
    return proj;
}

LatentTrajectory project(const TrajectoryCorpus& corpus, std::int64_t row,
                         const ProjectionMatrix& projection) {
    if (row < 0 || row >= corpus.m())
        throw DataError("corpus row " + std::to_string(row) + " out of range");
    const std::int64_t L = corpus.length();
    LatentTrajectory latent;
    latent.H.resize(projection.n(), L);
    for (std::int64_t t = 0; t < L; ++t) {
        Vec3 r(corpus.X(row, t), corpus.Y(row, t), corpus.Z(row, t));
        latent.H.col(t) = projection.C.transpose() * (r - projection.mean);
    }
    return latent;
}

ARModel fit_ar(const LatentTrajectory& latent, std::int64_t d, std::int64_t trajectory_id) {
    const std::int64_t n = latent.H.rows(), L = latent.H.cols();
    if (d < 1) throw ConfigError("AR order must be >= 1");
    if (L < d + n * d + 1)
        throw DataError("trajectory length " + std::to_string(L) +
                        " too short for AR fit: need at least " + std::to_string(d + n * d + 1) +
                        " frames (d=" + std::to_string(d) + ", n=" + std::to_string(n) + ")");

    const std::int64_t rows = L - d;
    MatX G(rows, n * d);  // regressors [h_{t-1} … h_{t-d}]
    MatX Y(rows, n);
    for (std::int64_t t = d; t < L; ++t) {
        for (std::int64_t lag = 1; lag <= d; ++lag)
            G.block(t - d, (lag - 1) * n, 1, n) = latent.H.col(t - lag).transpose();
        Y.row(t - d) = latent.H.col(t).transpose();
    }

    // minimum-norm least squares handles rank-deficient regressors
    Eigen::CompleteOrthogonalDecomposition<MatX> cod(G);
    const MatX theta = cod.solve(Y);  // (n·d)×n, stacked [B1ᵀ; …; Bdᵀ]

    ARModel model;
    model.trajectory_id = trajectory_id;
    model.B.reserve(static_cast<std::size_t>(d));
    for (std::int64_t i = 0; i < d; ++i)
        model.B.push_back(theta.block(i * n, 0, n, n).transpose());
    model.residual_rms = std::sqrt((G * theta - Y).squaredNorm() / double(rows * n));
    return model;
}

StateSpace companion_form(const ARModel& model, const ProjectionMatrix& projection) {
    const std::int64_t n = model.n(), d = model.d();
    if (n == 0 || d == 0) throw DataError("cannot lift an empty AR model");
    if (projection.n() != n)
        throw DataError("projection latent dimension " + std::to_string(projection.n()) +
                        " does not match AR model dimension " + std::to_string(n));
    const std::int64_t q = n * d;

    StateSpace ss;
    ss.trajectory_id = model.trajectory_id;
    ss.A = MatX::Zero(q, q);
    for (std::int64_t i = 0; i < d; ++i)
        ss.A.block(0, i * n, n, n) = model.B[static_cast<std::size_t>(i)];
    for (std::int64_t i = 1; i < d; ++i)
        ss.A.block(i * n, (i - 1) * n, n, n) = MatX::Identity(n, n);

    ss.Cs = MatX::Zero(projection.p(), q);
    ss.Cs.leftCols(n) = projection.C;
    return ss;
}

}  // namespace mtk
