#pragma once

/** @file
 * Latent factor estimation from autocovariance information.
 *
 * The loading space is the top-r eigenspace of the accumulated symmetrised
 * autocovariance matrix L = sum_{k=1}^{k0} G(k) G(k)^T, where G(k) is the lag-k
 * sample autocovariance. Loadings are scaled so that Q^T Q = N I_r, and factors
 * are recovered as f_t = (1/N) Q^T y_t, which makes Q f_t the orthogonal
 * projection of y_t onto span(Q).
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "arsieve/error.hpp"
#include "arsieve/panel.hpp"

namespace arsieve {

/// Eigenpairs sorted by non-increasing eigenvalue; column j of `eigenvectors`
/// belongs to eigenvalue j.
struct SymmetricSpectrum {
    Vector eigenvalues;
    Matrix eigenvectors;
};

struct LoadingMatrix {
    Matrix Q;   ///< scaled loadings, Q^T Q = N I_r
    Matrix Qo;  ///< orthonormal loadings, Q = sqrt(N) Qo

    [[nodiscard]] Eigen::Index N() const noexcept { return Q.rows(); }
    [[nodiscard]] Eigen::Index r() const noexcept { return Q.cols(); }
};

struct FactorModelFit {
    LoadingMatrix loadings;
    FactorSeries factors;
    SymmetricSpectrum spectrum;
    Eigen::Index r = 0;
    Eigen::Index k0 = 0;
    Eigen::Index R = 0;              ///< ratio-search bound (0 when r was fixed)
    bool r_estimated = false;
    std::vector<double> ratio_path;  ///< lambda_{j+1}/lambda_j, j = 1..R
};

/// Flips each column so that its largest-magnitude entry is positive.
inline void normalize_column_signs(Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        Eigen::Index arg = 0;
        m.col(j).cwiseAbs().maxCoeff(&arg);
        if (m(arg, j) < 0.0) m.col(j) *= -1.0;
    }
}

/// L = sum_{k=1}^{k0} G(k) G(k)^T, symmetrised to remove roundoff asymmetry.
[[nodiscard]] inline Matrix accumulated_sym_autocov(const Matrix& values, Eigen::Index k0) {
    const Eigen::Index N = values.rows();
    const Eigen::Index T = values.cols();
    require(k0 >= 1 && k0 <= T - 2, ErrorKind::invalid_input,
            "accumulated_sym_autocov: k0 = " + std::to_string(k0) + " outside [1, " + std::to_string(T - 2) + "]");
    const Matrix centered = values.colwise() - column_mean(values);
    Matrix L = Matrix::Zero(N, N);
    for (Eigen::Index k = 1; k <= k0; ++k) {
        const Eigen::Index n = T - k;
        Matrix G = centered.rightCols(n) * centered.leftCols(n).transpose();
        G /= static_cast<double>(n);
        L.noalias() += G * G.transpose();
    }
    return 0.5 * (L + L.transpose());
}

[[nodiscard]] inline Matrix accumulated_sym_autocov(const PanelSeries& panel, Eigen::Index k0) {
    return accumulated_sym_autocov(panel.values(), k0);
}

/**
 * Symmetric eigendecomposition, eigenvalues descending, eigenvector signs
 * normalised. The input is symmetrised as (S + S^T)/2 first; inputs whose
 * asymmetry exceeds 1e-8 relative are rejected.
 */
[[nodiscard]] inline SymmetricSpectrum sym_eigendecomposition(const Matrix& S) {
    require(S.rows() == S.cols(), ErrorKind::invalid_input, "sym_eigendecomposition: matrix is not square");
    require(S.rows() >= 1, ErrorKind::invalid_input, "sym_eigendecomposition: empty matrix");
    require(S.allFinite(), ErrorKind::invalid_input, "sym_eigendecomposition: non-finite entries");
    const double scale = S.cwiseAbs().maxCoeff();
    const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
    require(asym <= 1e-8 * scale, ErrorKind::invalid_input, "sym_eigendecomposition: matrix is not symmetric");

    const Matrix sym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) {
        fail(ErrorKind::numeric_failure, "eigendecomposition did not converge for a " + std::to_string(S.rows()) +
                                             "x" + std::to_string(S.cols()) + " matrix");
    }
    SymmetricSpectrum out;
    out.eigenvalues = solver.eigenvalues().reverse();
    out.eigenvectors = solver.eigenvectors().rowwise().reverse();
    normalize_column_signs(out.eigenvectors);
    return out;
}

struct RankEstimate {
    Eigen::Index r = 0;
    std::vector<double> ratio_path;
};

/// Default ratio-search bound floor(N/3), at least 1.
[[nodiscard]] inline Eigen::Index default_ratio_bound(Eigen::Index N) noexcept {
    return std::max<Eigen::Index>(1, N / 3);
}

/**
 * Ratio estimator r = argmin_{1<=j<=R} lambda_{j+1}/lambda_j. Ties go to the
 * smallest j. Ratios are only formed where lambda_j > 1e-12 lambda_1; beyond
 * that the ratio is +inf so it never wins.
 */
[[nodiscard]] inline RankEstimate estimate_num_factors(const Vector& eigenvalues, Eigen::Index R) {
    require(R >= 1, ErrorKind::invalid_input, "estimate_num_factors: R must be at least 1");
    require(eigenvalues.size() > R, ErrorKind::invalid_input,
            "estimate_num_factors: need more than R = " + std::to_string(R) + " eigenvalues");
    const double top = eigenvalues(0);
    require(top > 0.0, ErrorKind::degenerate_spectrum, "estimate_num_factors: all eigenvalues are zero");

    RankEstimate out;
    out.ratio_path.resize(static_cast<std::size_t>(R));
    double best = std::numeric_limits<double>::infinity();
    out.r = 1;
    for (Eigen::Index j = 0; j < R; ++j) {
        const double lo = eigenvalues(j);
        double ratio = std::numeric_limits<double>::infinity();
        if (lo > 1e-12 * top) ratio = std::max(eigenvalues(j + 1), 0.0) / lo;
        out.ratio_path[static_cast<std::size_t>(j)] = ratio;
        if (ratio < best) {
            best = ratio;
            out.r = j + 1;
        }
    }
    return out;
}

[[nodiscard]] inline LoadingMatrix estimate_loadings(const SymmetricSpectrum& spectrum, Eigen::Index r, Eigen::Index N) {
    require(spectrum.eigenvectors.rows() == N, ErrorKind::invalid_input,
            "estimate_loadings: spectrum dimension does not match N");
    require(r >= 1 && r <= spectrum.eigenvectors.cols(), ErrorKind::invalid_input,
            "estimate_loadings: r = " + std::to_string(r) + " exceeds the spectrum size");
    LoadingMatrix out;
    out.Qo = spectrum.eigenvectors.leftCols(r);
    normalize_column_signs(out.Qo);
    out.Q = std::sqrt(static_cast<double>(N)) * out.Qo;
    return out;
}

/// f_t = (1/N) Q^T y_t. With `raw` the unnormalised Q^T y_t is returned instead.
[[nodiscard]] inline FactorSeries extract_factors(const Matrix& values, const LoadingMatrix& loadings, bool raw = false) {
    require(values.rows() == loadings.N(), ErrorKind::invalid_input,
            "extract_factors: panel has " + std::to_string(values.rows()) + " rows but loadings have " +
                std::to_string(loadings.N()));
    Matrix f = loadings.Q.transpose() * values;
    if (!raw) f /= static_cast<double>(loadings.N());
    return FactorSeries(std::move(f));
}

[[nodiscard]] inline FactorSeries extract_factors(const PanelSeries& panel, const LoadingMatrix& loadings, bool raw = false) {
    return extract_factors(panel.values(), loadings, raw);
}

struct FactorOptions {
    Eigen::Index k0 = 2;
    std::optional<Eigen::Index> r;  ///< fixed rank; ratio estimator when empty
    std::optional<Eigen::Index> R;  ///< ratio-search bound; floor(N/3) when empty
    bool raw_factors = false;
};

/// Steps: accumulate L, decompose, choose r, scale loadings, project.
[[nodiscard]] inline FactorModelFit fit_factor_model(const Matrix& values, const FactorOptions& options = {}) {
    const Eigen::Index N = values.rows();
    FactorModelFit fit;
    fit.k0 = options.k0;
    fit.spectrum = sym_eigendecomposition(accumulated_sym_autocov(values, options.k0));
    if (options.r) {
        require(*options.r >= 1 && *options.r <= N, ErrorKind::invalid_input,
                "fixed r = " + std::to_string(*options.r) + " outside [1, " + std::to_string(N) + "]");
        fit.r = *options.r;
    } else {
        const Eigen::Index R = options.R.value_or(default_ratio_bound(N));
        require(R < N, ErrorKind::invalid_input,
                "ratio-search bound R = " + std::to_string(R) + " must be below N = " + std::to_string(N));
        auto est = estimate_num_factors(fit.spectrum.eigenvalues, R);
        fit.r = est.r;
        fit.R = R;
        fit.ratio_path = std::move(est.ratio_path);
        fit.r_estimated = true;
    }
    fit.loadings = estimate_loadings(fit.spectrum, fit.r, N);
    fit.factors = extract_factors(values, fit.loadings, options.raw_factors);
    return fit;
}

[[nodiscard]] inline FactorModelFit fit_factor_model(const PanelSeries& panel, const FactorOptions& options = {}) {
    return fit_factor_model(panel.values(), options);
}

}  // namespace arsieve
