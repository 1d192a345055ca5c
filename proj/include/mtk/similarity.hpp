#pragma once

#include <cstdint>
#include <vector>

#include "mtk/common.hpp"
#include "mtk/dynamics.hpp"

namespace mtk {

// Solution of AᵀPA − P = −Q for a joint two-system Gramian, block-partitioned
// into q×q quadrants.
struct LyapunovSolution {
    MatX P;             // 2q×2q, symmetric
    std::int64_t q = 0;
};

struct SubspaceAngles {
    std::vector<double> cos_sq;   // cos²θ_k, descending
    std::int64_t clamped = 0;     // entries forced into [1e-12, 1]
};

struct DistanceMatrix {
    MatX M;  // m×m symmetric, zero diagonal
};

struct AffinityMatrix {
    MatX S;  // m×m symmetric, unit diagonal, entries in (0,1]
    double beta = 1.0;
    double sigma = 0.0;  // dispersion used in the kernel
};

/// Solve AᵀPA − P = −Q by a vectorized direct solve with extended-precision
/// iterative refinement. Requires spectral radius of A strictly below 1;
/// validates the residual against 1e-8·‖Q‖.
MatX solve_discrete_lyapunov(const MatX& A, const MatX& Q);

/// Eigenvalues of P₁₁⁻¹P₁₂P₂₂⁻¹P₂₁ (computed via Cholesky whitening and an
/// SVD, which is the same spectrum), clamped to [1e-12, 1], descending.
SubspaceAngles subspace_angles(const LyapunovSolution& solution);

/// Martin distance between two lifted AR systems: stabilize any A with
/// spectral radius ≥ 1 by (ρ + 1e-6)⁻¹ rescaling, solve the joint Lyapunov
/// equation for the 2q×2q Gramian, and return sqrt(−Σ_k ln cos²θ_k).
double martin_distance(const StateSpace& a, const StateSpace& b);

/// Full symmetric pairwise Martin-distance matrix. Upper-triangle pairs are
/// tiled with plan_pairs and executed via the parallel runtime; the result is
/// identical for any worker count. Pair failures carry the (i, j) indices.
DistanceMatrix pairwise_matrix(const std::vector<StateSpace>& models, int workers,
                               std::int64_t tile_size = 256);

/// S_ij = exp(−beta·M_ij/σ), σ = population standard deviation of the
/// off-diagonal distances. σ = 0 (all distances equal) gives all-ones.
AffinityMatrix heat_kernel(const DistanceMatrix& distances, double beta);

}  // namespace mtk
