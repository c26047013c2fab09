#include "lumen/shfit.hpp"

#include <chrono>
#include <cmath>

namespace lumen {

Eigen::MatrixXd build_design_matrix(const TransportMatrix &t, int degree) {
    const int K = num_coeffs(degree);
    const std::size_t Q = t.cols(), P = t.rows();
    if (P == 0) throw std::invalid_argument("build_design_matrix: transport has no rows");

    Eigen::MatrixXd B(Q, K);
    std::vector<double> basis(K);
    for (int r = 0; r < t.env_height; ++r)
        for (int c = 0; c < t.env_width; ++c) {
            std::size_t j = static_cast<std::size_t>(r) * t.env_width + c;
            eval_sh_basis(pixel_to_direction(r, c, t.env_height, t.env_width), degree,
                          basis.data());
            for (int k = 0; k < K; ++k) B(static_cast<Eigen::Index>(j), k) = basis[k];
        }

    using RowMajorF =
        Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajorF> T(t.t.data(), static_cast<Eigen::Index>(P),
                                  static_cast<Eigen::Index>(Q));

    // Chunked promotion to double keeps the temporary small.
    Eigen::MatrixXd A(P, K);
    const Eigen::Index block = 1024;
    for (Eigen::Index i0 = 0; i0 < static_cast<Eigen::Index>(P); i0 += block) {
        Eigen::Index n = std::min<Eigen::Index>(block, static_cast<Eigen::Index>(P) - i0);
        A.middleRows(i0, n).noalias() = T.middleRows(i0, n).cast<double>() * B;
    }
    return A;
}

FitResult fit_sh(const Image3 &img, const TransportMatrix &t, const FitConfig &cfg) {
    Eigen::MatrixXd A = build_design_matrix(t, cfg.degree);
    return fit_sh(img, t, A, cfg);
}

FitResult fit_sh(const Image3 &img, const TransportMatrix &t, const Eigen::MatrixXd &A,
                 const FitConfig &cfg) {
    auto t0 = std::chrono::steady_clock::now();
    if (img.height != t.img_height || img.width != t.img_width)
        throw std::invalid_argument("fit_sh: image shape does not match transport rows");
    const Eigen::Index P = A.rows(), K = A.cols();

    Eigen::MatrixXd Y(P, 3);
    for (Eigen::Index i = 0; i < P; ++i) {
        std::size_t px = static_cast<std::size_t>(t.pixel_index[static_cast<std::size_t>(i)]);
        for (int ch = 0; ch < 3; ++ch) {
            float v = img.data[3 * px + ch];
            if (std::isnan(v)) throw std::invalid_argument("fit_sh: NaN in image");
            Y(i, ch) = v;
        }
    }

    Eigen::MatrixXd G = A.transpose() * A;  // K x K
    double lambda = cfg.lambda;
    if (lambda < 0.0) lambda = 1e-6 * G.diagonal().mean();

    Eigen::MatrixXd C(K, 3);
    if (cfg.solver == FitSolver::cholesky) {
        Eigen::MatrixXd Greg = G;
        Greg.diagonal().array() += lambda;
        Eigen::LLT<Eigen::MatrixXd> llt(Greg);
        bool bad = llt.info() != Eigen::Success;
        if (!bad) {
            // LLT can succeed on barely-singular systems; check conditioning
            // through the pivots when unregularized.
            Eigen::VectorXd d = llt.matrixL().toDenseMatrix().diagonal();
            bad = lambda == 0.0 && d.minCoeff() < 1e-10 * d.maxCoeff();
        }
        if (bad) {
            if (lambda == 0.0)
                throw IllConditioned(
                    "fit_sh: A is rank-deficient with lambda = 0; set lambda > 0");
            throw IllConditioned("fit_sh: Cholesky factorization failed");
        }
        C = llt.solve(A.transpose() * Y);
    } else {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd &sv = svd.singularValues();
        if (lambda == 0.0 && sv(sv.size() - 1) < 1e-12 * sv(0))
            throw IllConditioned(
                "fit_sh: A is rank-deficient with lambda = 0; set lambda > 0");
        // Tikhonov filter sigma / (sigma^2 + lambda) per singular value.
        Eigen::VectorXd f(sv.size());
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            f(i) = sv(i) / (sv(i) * sv(i) + lambda);
        C = svd.matrixV() * f.asDiagonal() * (svd.matrixU().transpose() * Y);
    }

    FitResult res;
    res.coeffs = SHCoeffs(cfg.degree);
    for (int k = 0; k < static_cast<int>(K); ++k)
        for (int ch = 0; ch < 3; ++ch) res.coeffs.at(k, ch) = C(k, ch);
    Eigen::MatrixXd R = A * C - Y;
    for (int ch = 0; ch < 3; ++ch) res.residual[static_cast<std::size_t>(ch)] = R.col(ch).norm();
    res.lambda_used = lambda;
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

EnvMap estimate_envmap_sh(const Image3 &img, const TransportMatrix &t, const FitConfig &cfg,
                          int height, int width) {
    return reconstruct_clamped(fit_sh(img, t, cfg).coeffs, height, width);
}

}  // namespace lumen
