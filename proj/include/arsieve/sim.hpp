#pragma once

/** @file
 * Data-generating processes for the coverage experiments.
 *
 * two_factor_ar1:  y_t = Qo f_t + u_t, Qo an orthonormalised N x 2 Gaussian
 *                  matrix, f_{i,t} = phi f_{i,t-1} + e_{i,t},
 *                  e_1 ~ N(0, N^nu), e_2 ~ N(0, 0.5 N^nu), u ~ N(0, I).
 * three_factor_var1: loadings cos(2 pi i/N), cos(4 pi i/N), 0.5 cos(16 pi i/N),
 *                  VAR(1) factors with 0.5 on the diagonal and 0.1 elsewhere,
 *                  unit-variance innovations, u ~ N(0, I).
 *
 * Draw order from SeededGenerator(seed): loading Gaussians (column-major,
 * two-factor only), then per time step the r factor innovations, then the
 * N x T noise column by column. Factors start at zero and run a discarded
 * 200-step pre-sample.
 */

#include <Eigen/Dense>
#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "arsieve/error.hpp"
#include "arsieve/factor.hpp"
#include "arsieve/inference.hpp"
#include "arsieve/panel.hpp"
#include "arsieve/rng.hpp"

namespace arsieve {

enum class DgpKind { two_factor_ar1, three_factor_var1 };

[[nodiscard]] inline std::string to_string(DgpKind k) {
    return k == DgpKind::two_factor_ar1 ? "two_factor" : "three_factor";
}

[[nodiscard]] inline DgpKind parse_dgp_kind(const std::string& s) {
    if (s == "two_factor" || s == "two-factor" || s == "two_factor_ar1") return DgpKind::two_factor_ar1;
    if (s == "three_factor" || s == "three-factor" || s == "three_factor_var1") return DgpKind::three_factor_var1;
    fail(ErrorKind::invalid_input, "unknown DGP '" + s + "' (expected two-factor or three-factor)");
}

struct DgpSpec {
    DgpKind kind = DgpKind::two_factor_ar1;
    Eigen::Index N = 50;
    Eigen::Index T = 200;
    double nu = 1.0;
    double ar_coeff = 0.5;
    std::vector<double> variance_weights{1.0, 0.5};  ///< innovation variances are weight * N^nu
    std::uint64_t seed = 0;
    Eigen::Index burn_in = 200;
};

/// Population quantities of a simulated panel. `loadings` is the matrix the
/// panel was generated with (y = loadings f + u); factor lags follow the
/// sample_autocov orientation C(k) = Cov(f_{t+k}, f_t) = A^k Sigma_0.
struct SimulationTruth {
    Matrix loadings;
    Matrix factors;       ///< r x T
    Matrix coefficient;   ///< VAR(1) matrix A
    Matrix innovation_cov;
    Matrix factor_cov0;   ///< stationary covariance Sigma_0
    double nu = 1.0;

    [[nodiscard]] Matrix factor_autocov(Eigen::Index k) const {
        Matrix Ak = Matrix::Identity(coefficient.rows(), coefficient.cols());
        for (Eigen::Index j = 0; j < k; ++j) Ak = Ak * coefficient;
        return Ak * factor_cov0;
    }

    /// Population Cov(y_{t+k}, y_t) = Q C(k) Q^T.
    [[nodiscard]] Matrix panel_autocov(Eigen::Index k) const {
        return loadings * factor_autocov(k) * loadings.transpose();
    }

    /// Population mean statistic; factors have mean zero.
    [[nodiscard]] double mean_statistic() const { return 0.0; }

    /// Population spiked eigenvalue on the same scale as spiked_eigenvalue(),
    /// for a panel of length T.
    [[nodiscard]] double spiked_eigenvalue(Eigen::Index k, Eigen::Index i, bool standardize, Eigen::Index T) const {
        return spiked_eigenvalues_population(k, i, standardize, T).back();
    }

    [[nodiscard]] std::vector<double> spiked_eigenvalues_population(Eigen::Index k, Eigen::Index count, bool standardize,
                                                                    Eigen::Index T) const {
        const Matrix C = factor_autocov(k);
        const Matrix gram = loadings.transpose() * loadings;
        const Matrix L = Eigen::LLT<Matrix>(gram).matrixL();
        const Matrix M = L.transpose() * C.transpose() * gram * C * L;
        Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
        const Eigen::Index r = M.rows();
        const double scale = eigen_scale(T, loadings.rows(), standardize);
        std::vector<double> out(static_cast<std::size_t>(count), 0.0);
        for (Eigen::Index j = 0; j < std::min(count, r); ++j)
            out[static_cast<std::size_t>(j)] = scale * std::max(0.0, solver.eigenvalues()(r - 1 - j));
        return out;
    }

    /// Population value of a scalar statistic.
    [[nodiscard]] double statistic(const StatisticId& stat, Eigen::Index T) const {
        switch (stat.kind) {
        case StatisticKind::mean_statistic: return mean_statistic();
        case StatisticKind::spiked_eigenvalue: return spiked_eigenvalue(stat.lag, stat.index, stat.standardize, T);
        default: fail(ErrorKind::invalid_input, "no scalar population value for statistic '" + stat.name() + "'");
        }
    }
};

/// Sigma = A Sigma A^T + S by fixed-point iteration (A stable).
[[nodiscard]] inline Matrix discrete_lyapunov(const Matrix& A, const Matrix& S) {
    Matrix sigma = S;
    Matrix term = S;
    for (int it = 0; it < 10000; ++it) {
        term = A * term * A.transpose();
        sigma += term;
        if (term.cwiseAbs().maxCoeff() < 1e-16 * sigma.cwiseAbs().maxCoeff()) break;
    }
    return sigma;
}

/// Orthonormal N x r loadings from the QR factorisation of a Gaussian matrix.
[[nodiscard]] inline Matrix random_orthonormal_loadings(Eigen::Index N, Eigen::Index r, SeededGenerator& gen) {
    Matrix G(N, r);
    for (Eigen::Index j = 0; j < r; ++j)
        for (Eigen::Index i = 0; i < N; ++i) G(i, j) = draw_standard_normal(gen);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ() * Matrix::Identity(N, r);
    normalize_column_signs(Q);
    return Q;
}

namespace detail {

inline Matrix simulate_var1(const Matrix& A, const Vector& innovation_sd, Eigen::Index T, Eigen::Index burn,
                            SeededGenerator& gen) {
    const Eigen::Index r = A.rows();
    Matrix f(r, T);
    Vector x = Vector::Zero(r);
    Vector e(r);
    for (Eigen::Index t = -burn; t < T; ++t) {
        for (Eigen::Index i = 0; i < r; ++i) e(i) = innovation_sd(i) * draw_standard_normal(gen);
        x = A * x + e;
        if (t >= 0) f.col(t) = x;
    }
    return f;
}

inline Matrix add_unit_noise(const Matrix& signal, SeededGenerator& gen) {
    Matrix y = signal;
    for (Eigen::Index t = 0; t < y.cols(); ++t)
        for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, t) += draw_standard_normal(gen);
    return y;
}

}  // namespace detail

[[nodiscard]] inline std::pair<PanelSeries, SimulationTruth> simulate_two_factor(const DgpSpec& spec) {
    require(spec.N >= 3, ErrorKind::invalid_input, "two-factor DGP needs N >= 3");
    require(spec.T >= 50, ErrorKind::invalid_input, "two-factor DGP needs T >= 50");
    check_nu(spec.nu);
    require(std::abs(spec.ar_coeff) < 1.0, ErrorKind::invalid_input, "AR coefficient must satisfy |phi| < 1");
    const Eigen::Index r = static_cast<Eigen::Index>(spec.variance_weights.size());
    require(r >= 1 && r <= spec.N, ErrorKind::invalid_input, "bad number of factors");

    SeededGenerator gen(spec.seed);
    SimulationTruth truth;
    truth.nu = spec.nu;
    truth.loadings = random_orthonormal_loadings(spec.N, r, gen);
    truth.coefficient = spec.ar_coeff * Matrix::Identity(r, r);
    Vector var(r);
    const double strength = std::pow(static_cast<double>(spec.N), spec.nu);
    for (Eigen::Index i = 0; i < r; ++i) var(i) = spec.variance_weights[static_cast<std::size_t>(i)] * strength;
    truth.innovation_cov = var.asDiagonal();
    truth.factor_cov0 = (var / (1.0 - spec.ar_coeff * spec.ar_coeff)).asDiagonal();
    truth.factors = detail::simulate_var1(truth.coefficient, var.cwiseSqrt(), spec.T, spec.burn_in, gen);
    Matrix y = detail::add_unit_noise(truth.loadings * truth.factors, gen);
    return {PanelSeries(std::move(y)), std::move(truth)};
}

[[nodiscard]] inline Matrix three_factor_coefficient() {
    Matrix A(3, 3);
    A << 0.5, 0.1, 0.1, 0.1, 0.5, 0.1, 0.1, 0.1, 0.5;
    return A;
}

[[nodiscard]] inline Matrix fourier_loadings(Eigen::Index N) {
    Matrix Q(N, 3);
    const double n = static_cast<double>(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        const double x = static_cast<double>(i + 1);
        Q(i, 0) = std::cos(2.0 * std::numbers::pi * x / n);
        Q(i, 1) = std::cos(4.0 * std::numbers::pi * x / n);
        Q(i, 2) = 0.5 * std::cos(16.0 * std::numbers::pi * x / n);
    }
    return Q;
}

[[nodiscard]] inline std::pair<PanelSeries, SimulationTruth> simulate_three_factor_var1(const DgpSpec& spec) {
    require(spec.N >= 5, ErrorKind::invalid_input, "three-factor DGP needs N >= 5");
    require(spec.T >= 2, ErrorKind::invalid_input, "three-factor DGP needs T >= 2");
    SeededGenerator gen(spec.seed);
    SimulationTruth truth;
    truth.nu = spec.nu;
    truth.loadings = fourier_loadings(spec.N);
    truth.coefficient = three_factor_coefficient();
    truth.innovation_cov = Matrix::Identity(3, 3);
    truth.factor_cov0 = discrete_lyapunov(truth.coefficient, truth.innovation_cov);
    truth.factors = detail::simulate_var1(truth.coefficient, Vector::Ones(3), spec.T, spec.burn_in, gen);
    Matrix y = detail::add_unit_noise(truth.loadings * truth.factors, gen);
    return {PanelSeries(std::move(y)), std::move(truth)};
}

[[nodiscard]] inline std::pair<PanelSeries, SimulationTruth> simulate(const DgpSpec& spec) {
    return spec.kind == DgpKind::two_factor_ar1 ? simulate_two_factor(spec) : simulate_three_factor_var1(spec);
}

}  // namespace arsieve
