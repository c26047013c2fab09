#pragma once

#include <Eigen/Dense>
#include <array>

#include "lumen/render.hpp"
#include "lumen/sphharm.hpp"

namespace lumen {

enum class FitSolver { cholesky, svd };

struct FitConfig {
    int degree = 5;
    // Negative requests the default: 1e-6 * mean diagonal of A^T A.
    double lambda = -1.0;
    FitSolver solver = FitSolver::cholesky;
};

struct FitResult {
    SHCoeffs coeffs;
    std::array<double, 3> residual{};  // ||A c - y||_2 per channel
    double lambda_used = 0.0;
    double seconds = 0.0;
};

// A = T * B with B[j,k] = Y_k(d_j); the solid angle already lives in T.
Eigen::MatrixXd build_design_matrix(const TransportMatrix &t, int degree);

// Per channel: c = argmin ||A c - y||^2 + lambda ||c||^2, one factorization
// shared across the three right-hand sides. Rank-deficient A with lambda = 0
// raises IllConditioned; NaN image values raise invalid_argument.
FitResult fit_sh(const Image3 &img, const TransportMatrix &t, const FitConfig &cfg);
FitResult fit_sh(const Image3 &img, const TransportMatrix &t, const Eigen::MatrixXd &A,
                 const FitConfig &cfg);

// fit_sh then reconstruct, clamped at 0.
EnvMap estimate_envmap_sh(const Image3 &img, const TransportMatrix &t, const FitConfig &cfg,
                          int height, int width);

}  // namespace lumen
