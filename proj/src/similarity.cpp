#include "mtk/similarity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

#include "mtk/parallel.hpp"

namespace mtk {

namespace {

double spectral_radius(const MatX& A) {
    return Eigen::EigenSolver<MatX>(A, /*computeEigenvectors=*/false)
        .eigenvalues()
        .cwiseAbs()
        .maxCoeff();
}

// Rescale A to spectral radius < 1 when needed (documented stabilization).
MatX stabilized(const MatX& A) {
    const double rho = spectral_radius(A);
    if (rho >= 1.0) return A / (rho + 1e-6);
    return A;
}

using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

MatX kron(const MatX& X, const MatX& Y) {
    MatX K(X.rows() * Y.rows(), X.cols() * Y.cols());
    for (std::int64_t i = 0; i < X.rows(); ++i)
        for (std::int64_t j = 0; j < X.cols(); ++j)
            K.block(i * Y.rows(), j * Y.cols(), Y.rows(), Y.cols()) = X(i, j) * Y;
    return K;
}

std::string fmt_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    return buf;
}

// Solve A1ᵀ X A2 − X = −Q by the vectorized linear system
// (A2ᵀ ⊗ A1ᵀ − I) vec(X) = −vec(Q), with A1 = A2 giving the discrete
// Lyapunov equation. Spectral radii near 1 make ‖X‖ ≫ ‖Q‖, where a plain
// double-precision solve leaves a residual above eps·‖X‖; mixed-precision
// iterative refinement (double factorization, extended-precision residuals)
// recovers a solution whose true residual is small relative to ‖Q‖. Throws
// when the refined residual still exceeds 1e-8·‖Q‖.
MatL solve_shifted_kron(const MatX& A1, const MatX& A2, const MatX& Q, const char* what) {
    const std::int64_t n = Q.rows();
    MatX K = kron(A2.transpose(), A1.transpose());
    K -= MatX::Identity(n * n, n * n);
    const Eigen::PartialPivLU<MatX> lu(K);

    const VecX rhs = -Eigen::Map<const VecX>(Q.data(), n * n);
    const VecX x0 = lu.solve(rhs);

    const MatL A1l = A1.cast<long double>(), A2l = A2.cast<long double>();
    const MatL Ql = Q.cast<long double>();
    MatL X = Eigen::Map<const MatX>(x0.data(), n, n).cast<long double>();

    const long double q_norm = Ql.norm();
    long double best = std::numeric_limits<long double>::infinity();
    for (int step = 0; step < 8; ++step) {
        const MatL R = A1l.transpose() * X * A2l - X + Ql;
        const long double r_norm = R.norm();
        if (r_norm >= best) break;  // stalled at the extended-precision floor
        best = r_norm;
        if (r_norm <= 1e-13L * std::max(q_norm, 1e-300L)) break;
        const MatX Rd = R.cast<double>();
        const VecX e = lu.solve(Eigen::Map<const VecX>(Rd.data(), n * n));
        X -= Eigen::Map<const MatX>(e.data(), n, n).cast<long double>();
    }

    const double residual = double((A1l.transpose() * X * A2l - X + Ql).norm());
    if (residual > 1e-8 * std::max(double(q_norm), 1e-300))
        throw NumericalError(std::string(what) + " residual " + fmt_sci(residual) +
                             " exceeds tolerance 1e-8·‖Q‖ (‖Q‖ = " + fmt_sci(double(q_norm)) +
                             ")");
    return X;
}

// Per-model state reused across all pairs: stabilized dynamics plus the
// model's own observability Gramian.
struct PreparedModel {
    MatX A;   // stabilized
    MatX Cs;
    MatX P;   // solves AᵀPA − P = −CsᵀCs
    std::int64_t trajectory_id = -1;
};

PreparedModel prepare_model(const StateSpace& s) {
    PreparedModel prep;
    prep.A = stabilized(s.A);
    prep.Cs = s.Cs;
    prep.P = solve_discrete_lyapunov(prep.A, s.Cs.transpose() * s.Cs);
    prep.trajectory_id = s.trajectory_id;
    return prep;
}

// The joint Lyapunov equation for blkdiag(A1, A2) with output [C1 C2]
// decouples exactly into the two own-Gramians and one cross block; assemble
// the full 2q×2q solution from them.
double martin_prepared(const PreparedModel& a, const PreparedModel& b) {
    const std::int64_t q = a.A.rows();
    const MatX Q12 = a.Cs.transpose() * b.Cs;
    const MatX P12 = solve_shifted_kron(a.A, b.A, Q12, "cross-Gramian").cast<double>();

    LyapunovSolution solution;
    solution.q = q;
    solution.P.resize(2 * q, 2 * q);
    solution.P.topLeftCorner(q, q) = a.P;
    solution.P.topRightCorner(q, q) = P12;
    solution.P.bottomLeftCorner(q, q) = P12.transpose();
    solution.P.bottomRightCorner(q, q) = b.P;

    const SubspaceAngles angles = subspace_angles(solution);
    double d2 = 0.0;
    for (double c2 : angles.cos_sq) d2 -= std::log(c2);
    return std::sqrt(std::max(0.0, d2));
}

}  // namespace

MatX solve_discrete_lyapunov(const MatX& A, const MatX& Q) {
    if (A.rows() != A.cols()) throw DataError("Lyapunov: A must be square");
    if (Q.rows() != A.rows() || Q.cols() != A.cols())
        throw DataError("Lyapunov: Q must match A's shape");
    const double q_norm = Q.norm();
    if ((Q - Q.transpose()).norm() > 1e-9 * std::max(1.0, q_norm))
        throw DataError("Lyapunov: Q must be symmetric");

    const double rho = spectral_radius(A);
    if (rho >= 1.0)
        throw NumericalError("unstable system: spectral radius " + std::to_string(rho) +
                             " >= 1, Lyapunov equation has no Gramian solution");

    MatL P = solve_shifted_kron(A, A, Q, "Lyapunov");
    P = ((P + P.transpose()) * 0.5L).eval();
    return P.cast<double>();
}

SubspaceAngles subspace_angles(const LyapunovSolution& solution) {
    const std::int64_t q = solution.q;
    if (q < 1 || solution.P.rows() != 2 * q || solution.P.cols() != 2 * q)
        throw DataError("subspace angles: P must be 2q×2q");

    const MatX P11 = solution.P.topLeftCorner(q, q);
    const MatX P12 = solution.P.topRightCorner(q, q);
    const MatX P22 = solution.P.bottomRightCorner(q, q);

    // 1e15 ~ the invertibility limit in double precision; the pipeline's own
    // fitted rotations produce Gramians around 1e14 that are still usable
    auto check_block = [q](const MatX& block, const char* name) {
        Eigen::SelfAdjointEigenSolver<MatX> es(block, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(q - 1);
        if (!(lo > 0.0) || hi / lo > 1e15) {
            const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
            throw NumericalError(std::string("singular Gramian block ") + name +
                                 ": condition number " + std::to_string(cond) +
                                 " (eigenvalue range [" + std::to_string(lo) + ", " +
                                 std::to_string(hi) + "])");
        }
    };
    check_block(P11, "P11");
    check_block(P22, "P22");

    // cos²θ_k are the eigenvalues of P11⁻¹P12 P22⁻¹P21; with P11 = L1 L1ᵀ and
    // P22 = L2 L2ᵀ these equal the squared singular values of L1⁻¹ P12 L2⁻ᵀ.
    const Eigen::LLT<MatX> llt1(P11), llt2(P22);
    if (llt1.info() != Eigen::Success || llt2.info() != Eigen::Success)
        throw NumericalError("Gramian block not positive definite in subspace-angle whitening");
    MatX G = llt1.matrixL().solve(P12);
    G = llt2.matrixL().solve(G.transpose()).transpose();

    Eigen::JacobiSVD<MatX> svd(G);
    SubspaceAngles out;
    out.cos_sq.resize(static_cast<std::size_t>(q));
    for (std::int64_t k = 0; k < q; ++k) {
        const double s = svd.singularValues()(k);
        double c2 = s * s;
        if (c2 < 1e-12 || c2 > 1.0) {
            c2 = std::clamp(c2, 1e-12, 1.0);
            ++out.clamped;
        }
        out.cos_sq[static_cast<std::size_t>(k)] = c2;
    }
    std::sort(out.cos_sq.begin(), out.cos_sq.end(), std::greater<>());
    return out;
}

double martin_distance(const StateSpace& a, const StateSpace& b) {
    if (a.Cs.rows() != b.Cs.rows())
        throw DataError("Martin distance: output dimensions differ (" +
                        std::to_string(a.Cs.rows()) + " vs " + std::to_string(b.Cs.rows()) + ")");
    if (a.q() != b.q())
        throw DataError("Martin distance: lifted state dimensions differ (" +
                        std::to_string(a.q()) + " vs " + std::to_string(b.q()) + ")");
    try {
        return martin_prepared(prepare_model(a), prepare_model(b));
    } catch (const NumericalError& e) {
        throw NumericalError("Martin distance between trajectories " +
                             std::to_string(a.trajectory_id) + " and " +
                             std::to_string(b.trajectory_id) + ": " + e.what());
    }
}

DistanceMatrix pairwise_matrix(const std::vector<StateSpace>& models, int workers,
                               std::int64_t tile_size) {
    const std::int64_t m = static_cast<std::int64_t>(models.size());
    if (m < 1) throw DataError("pairwise matrix needs at least one model");

    DistanceMatrix out;
    out.M = MatX::Zero(m, m);
    if (m == 1) return out;

    // spectral radii and own-Gramians are per-model work; hoist them out of
    // the quadratic pair loop
    std::vector<PreparedModel> prepared;
    prepared.reserve(models.size());
    for (const auto& model : models) {
        try {
            prepared.push_back(prepare_model(model));
        } catch (const NumericalError& e) {
            throw NumericalError("trajectory " + std::to_string(model.trajectory_id) + ": " +
                                 e.what());
        }
    }

    const auto plan = parallel::plan_pairs(m, tile_size);
    auto tiles = parallel::run(
        plan,
        [&](parallel::ChunkRange chunk) {
            std::vector<double> values;
            values.reserve(static_cast<std::size_t>(chunk.size()));
            for (std::int64_t linear = chunk.begin; linear < chunk.end; ++linear) {
                const auto [i, j] = parallel::pair_from_linear(m, linear);
                try {
                    values.push_back(martin_prepared(prepared[i], prepared[j]));
                } catch (const NumericalError& e) {
                    throw NumericalError("pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                         "): " + e.what());
                } catch (const DataError& e) {
                    throw DataError("pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                    "): " + e.what());
                }
            }
            return values;
        },
        workers);

    for (std::size_t c = 0; c < plan.chunks.size(); ++c) {
        const auto& chunk = plan.chunks[c];
        for (std::int64_t linear = chunk.begin; linear < chunk.end; ++linear) {
            const auto [i, j] = parallel::pair_from_linear(m, linear);
            const double d = tiles[c][static_cast<std::size_t>(linear - chunk.begin)];
            out.M(i, j) = d;
            out.M(j, i) = d;
        }
    }
    return out;
}

AffinityMatrix heat_kernel(const DistanceMatrix& distances, double beta) {
    if (beta <= 0.0) throw ConfigError("heat kernel beta must be > 0");
    const MatX& M = distances.M;
    const std::int64_t m = M.rows();
    if (m < 1 || M.cols() != m) throw DataError("distance matrix must be square and nonempty");

    double mean = 0.0, count = double(m) * double(m - 1);
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < m; ++j)
            if (i != j) mean += M(i, j);
    double sigma = 0.0;
    if (count > 0.0) {
        mean /= count;
        double var = 0.0;
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < m; ++j)
                if (i != j) var += (M(i, j) - mean) * (M(i, j) - mean);
        sigma = std::sqrt(var / count);
    }

    AffinityMatrix out;
    out.beta = beta;
    out.sigma = sigma;
    if (sigma == 0.0) {
        out.S = MatX::Ones(m, m);
        return out;
    }
    out.S = (-beta / sigma * M.array()).exp().matrix();
    return out;
}

}  // namespace mtk
