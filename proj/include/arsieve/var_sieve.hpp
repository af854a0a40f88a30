#pragma once

/** @file
 * Yule-Walker VAR(p) sieve for the extracted factors.
 *
 * Orientation: factor_autocov(k) = (1/(T-k)) sum_t f_t f_{t+k}^T, so the
 * "lead" covariance C(k) = E f_{t+k} f_t^T used by the normal equations is
 * its transpose. The sample Yule-Walker system reads
 *
 *     [C(1) ... C(p)] = [A_1 ... A_p] Pi,    Pi[l, j] = C(j - l),
 *
 * with C(-m) = C(m)^T, which makes Pi symmetric block-Toeplitz.
 */

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "arsieve/error.hpp"
#include "arsieve/panel.hpp"

namespace arsieve {

struct VarSieveModel {
    Eigen::Index p = 0;
    std::vector<Matrix> coeffs;  ///< A_1..A_p, each r x r
    Matrix residuals;            ///< r x (T - p), t = p+1..T
    Matrix residual_cov;         ///< centred, divisor T - p
    Vector factor_mean;          ///< removed before fitting, re-added on generation
    double spectral_radius = 0.0;
    double ridge = 0.0;          ///< diagonal loading used on Pi

    [[nodiscard]] Eigen::Index r() const noexcept { return factor_mean.size(); }
};

enum class OrderCriterion { aic, sc, fixed, rate_rule };

[[nodiscard]] inline std::string to_string(OrderCriterion c) {
    switch (c) {
    case OrderCriterion::aic: return "aic";
    case OrderCriterion::sc: return "sc";
    case OrderCriterion::fixed: return "fixed";
    case OrderCriterion::rate_rule: return "rate-rule";
    }
    return "unknown";
}

struct OrderSelection {
    OrderCriterion criterion = OrderCriterion::aic;
    Eigen::Index p_max = 8;
    Eigen::Index fixed_p = 1;  ///< used by OrderCriterion::fixed
    Eigen::Index chosen_p = 0;
    std::vector<double> scores;
};

enum class Stability { stable, marginal, explosive };

[[nodiscard]] inline std::string to_string(Stability s) {
    switch (s) {
    case Stability::stable: return "stable";
    case Stability::marginal: return "marginal";
    case Stability::explosive: return "explosive";
    }
    return "unknown";
}

/// (1/(T-k)) sum_{t=1}^{T-k} f_t f_{t+k}^T on an already-demeaned series.
[[nodiscard]] inline Matrix factor_autocov(const Matrix& f, Eigen::Index k) {
    const Eigen::Index T = f.cols();
    require(k >= 0 && k <= T - 2, ErrorKind::invalid_lag,
            "factor_autocov: lag " + std::to_string(k) + " outside [0, " + std::to_string(T - 2) + "]");
    const Eigen::Index n = T - k;
    Matrix out = f.leftCols(n) * f.rightCols(n).transpose();
    out /= static_cast<double>(n);
    return out;
}

/// Pi[l, j] = C(j - l) with C(m) = gamma[m]^T and C(-m) = gamma[m].
[[nodiscard]] inline Matrix block_toeplitz(const std::vector<Matrix>& gamma, Eigen::Index p) {
    const Eigen::Index r = gamma.front().rows();
    Matrix Pi(r * p, r * p);
    for (Eigen::Index l = 0; l < p; ++l) {
        for (Eigen::Index j = 0; j < p; ++j) {
            const Eigen::Index m = j - l;
            if (m >= 0)
                Pi.block(l * r, j * r, r, r) = gamma[static_cast<std::size_t>(m)].transpose();
            else
                Pi.block(l * r, j * r, r, r) = gamma[static_cast<std::size_t>(-m)];
        }
    }
    return Pi;
}

struct YuleWalkerSolution {
    std::vector<Matrix> coeffs;
    double ridge = 0.0;
};

/**
 * Solves the Yule-Walker system from factor_autocov values gamma[0..p].
 * Pi is loaded with eps I, eps = 1e-10 trace(Pi)/(rp); on Cholesky failure eps
 * is raised 100-fold once before giving up.
 */
[[nodiscard]] inline YuleWalkerSolution solve_yule_walker(const std::vector<Matrix>& gamma, Eigen::Index p) {
    require(p >= 1, ErrorKind::invalid_input, "solve_yule_walker: p must be at least 1");
    require(static_cast<Eigen::Index>(gamma.size()) >= p + 1, ErrorKind::invalid_input,
            "solve_yule_walker: need autocovariances up to lag p");
    const Eigen::Index r = gamma.front().rows();
    const Matrix Pi = block_toeplitz(gamma, p);
    Matrix rhs(r * p, r);  // [C(1) ... C(p)]^T stacked
    for (Eigen::Index l = 0; l < p; ++l) rhs.block(l * r, 0, r, r) = gamma[static_cast<std::size_t>(l + 1)];

    const double trace = Pi.trace();
    double eps = 1e-10 * trace / static_cast<double>(r * p);
    if (!(trace > 0.0) || !std::isfinite(trace)) {
        fail(ErrorKind::singular_system, "Yule-Walker system is singular (zero factor variance)");
    }
    for (int attempt = 0; attempt < 2; ++attempt, eps *= 100.0) {
        Matrix loaded = Pi;
        loaded.diagonal().array() += eps;
        Eigen::LLT<Matrix> llt(loaded);
        if (llt.info() != Eigen::Success) continue;
        const Matrix X = llt.solve(rhs);  // Pi A^T = [C(1)..C(p)]^T
        if (!X.allFinite()) continue;
        YuleWalkerSolution out;
        out.ridge = eps;
        out.coeffs.reserve(static_cast<std::size_t>(p));
        for (Eigen::Index l = 0; l < p; ++l) out.coeffs.push_back(X.block(l * r, 0, r, r).transpose());
        return out;
    }
    fail(ErrorKind::singular_system,
         "Yule-Walker system of size " + std::to_string(r * p) + " is numerically singular after ridge");
}

[[nodiscard]] inline Matrix companion_matrix(const std::vector<Matrix>& coeffs) {
    const Eigen::Index p = static_cast<Eigen::Index>(coeffs.size());
    const Eigen::Index r = coeffs.front().rows();
    Matrix C = Matrix::Zero(r * p, r * p);
    for (Eigen::Index l = 0; l < p; ++l) C.block(0, l * r, r, r) = coeffs[static_cast<std::size_t>(l)];
    if (p > 1) C.block(r, 0, r * (p - 1), r * (p - 1)).setIdentity();
    return C;
}

[[nodiscard]] inline double companion_spectral_radius(const std::vector<Matrix>& coeffs) {
    const Matrix C = companion_matrix(coeffs);
    if (C.rows() == 1) return std::abs(C(0, 0));
    Eigen::EigenSolver<Matrix> solver(C, false);
    require(solver.info() == Eigen::Success, ErrorKind::numeric_failure,
            "companion eigenvalues did not converge for a " + std::to_string(C.rows()) + "x" +
                std::to_string(C.rows()) + " matrix");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// e_t = f_t - sum_l A_l f_{t-l} for t = start..T-1 (0-based), start >= p.
[[nodiscard]] inline Matrix var_residuals(const Matrix& f, const std::vector<Matrix>& coeffs, Eigen::Index start) {
    const Eigen::Index p = static_cast<Eigen::Index>(coeffs.size());
    const Eigen::Index T = f.cols();
    Matrix e = f.rightCols(T - start);
    for (Eigen::Index l = 1; l <= p; ++l)
        e.noalias() -= coeffs[static_cast<std::size_t>(l - 1)] * f.middleCols(start - l, T - start);
    return e;
}

/// Centred second moment, divisor = number of columns.
[[nodiscard]] inline Matrix centered_cov(const Matrix& e) {
    const Matrix c = e.colwise() - e.rowwise().mean();
    Matrix out = c * c.transpose() / static_cast<double>(e.cols());
    return 0.5 * (out + out.transpose());
}

/// Builds a model from known coefficients (no residuals); used for
/// simulation and for checking stability of hand-written systems.
[[nodiscard]] inline VarSieveModel make_var_model(std::vector<Matrix> coeffs, Vector factor_mean) {
    require(!coeffs.empty(), ErrorKind::invalid_input, "make_var_model: need at least one coefficient matrix");
    VarSieveModel m;
    m.p = static_cast<Eigen::Index>(coeffs.size());
    m.coeffs = std::move(coeffs);
    m.factor_mean = std::move(factor_mean);
    m.spectral_radius = companion_spectral_radius(m.coeffs);
    const Eigen::Index r = m.factor_mean.size();
    m.residuals = Matrix::Zero(r, 0);
    m.residual_cov = Matrix::Zero(r, r);
    return m;
}

/// Fits VAR(p) by Yule-Walker to the demeaned factors.
[[nodiscard]] inline VarSieveModel yule_walker_fit(const FactorSeries& factors, Eigen::Index p) {
    require(p >= 1, ErrorKind::invalid_input, "yule_walker_fit: p must be at least 1");
    const Eigen::Index T = factors.T();
    require(T > 4 * p, ErrorKind::insufficient_sample,
            "yule_walker_fit: T = " + std::to_string(T) + " too short for order p = " + std::to_string(p));
    auto [centered, mean] = demean(factors);
    const Matrix& f = centered.values();
    std::vector<Matrix> gamma;
    gamma.reserve(static_cast<std::size_t>(p + 1));
    for (Eigen::Index k = 0; k <= p; ++k) gamma.push_back(factor_autocov(f, k));
    auto sol = solve_yule_walker(gamma, p);

    VarSieveModel m;
    m.p = p;
    m.coeffs = std::move(sol.coeffs);
    m.ridge = sol.ridge;
    m.factor_mean = std::move(mean);
    m.residuals = var_residuals(f, m.coeffs, p);
    m.residual_cov = centered_cov(m.residuals);
    m.spectral_radius = companion_spectral_radius(m.coeffs);
    return m;
}

/// Default search ceiling: min(8, floor((T-1)/4)), at least 1.
[[nodiscard]] inline Eigen::Index default_p_max(Eigen::Index T) noexcept {
    return std::max<Eigen::Index>(1, std::min<Eigen::Index>(8, (T - 1) / 4));
}

/// max(1, floor((T / ln T)^(1/6))).
[[nodiscard]] inline Eigen::Index rate_rule_order(Eigen::Index T) {
    require(T >= 3, ErrorKind::invalid_input, "rate_rule_order: T must be at least 3");
    const double t = static_cast<double>(T);
    return std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::floor(std::pow(t / std::log(t), 1.0 / 6.0))));
}

/**
 * Picks the VAR order. AIC/SC minimise log det(Sigma_e(p)) + penalty(p) where
 * every candidate's residuals are evaluated on the common window
 * t = p_max+1..T (T_eff = T - p_max):
 *     AIC: 2 p r^2 / T_eff        SC: ln(T_eff) p r^2 / T_eff
 * Candidates whose Yule-Walker system is singular score +inf.
 */
[[nodiscard]] inline OrderSelection select_order(const FactorSeries& factors, OrderSelection spec) {
    const Eigen::Index T = factors.T();
    spec.scores.clear();
    switch (spec.criterion) {
    case OrderCriterion::fixed:
        require(spec.fixed_p >= 1 && T > 4 * spec.fixed_p, ErrorKind::invalid_input,
                "fixed order p = " + std::to_string(spec.fixed_p) + " invalid for T = " + std::to_string(T));
        spec.chosen_p = spec.fixed_p;
        spec.p_max = std::max(spec.p_max, spec.fixed_p);
        return spec;
    case OrderCriterion::rate_rule:
        spec.chosen_p = rate_rule_order(T);
        while (spec.chosen_p > 1 && T <= 4 * spec.chosen_p) --spec.chosen_p;
        spec.p_max = std::max(spec.p_max, spec.chosen_p);
        return spec;
    case OrderCriterion::aic:
    case OrderCriterion::sc: break;
    }

    require(spec.p_max >= 1, ErrorKind::invalid_input, "select_order: p_max must be at least 1");
    require(T > 4 * spec.p_max, ErrorKind::invalid_input,
            "select_order: p_max = " + std::to_string(spec.p_max) + " too large for T = " + std::to_string(T));
    auto [centered, mean] = demean(factors);
    const Matrix& f = centered.values();
    const Eigen::Index r = f.rows();
    const Eigen::Index t_eff = T - spec.p_max;
    std::vector<Matrix> gamma;
    for (Eigen::Index k = 0; k <= spec.p_max; ++k) gamma.push_back(factor_autocov(f, k));

    double best = std::numeric_limits<double>::infinity();
    spec.chosen_p = 0;
    for (Eigen::Index p = 1; p <= spec.p_max; ++p) {
        double score = std::numeric_limits<double>::infinity();
        try {
            const auto sol = solve_yule_walker(gamma, p);
            const Matrix cov = centered_cov(var_residuals(f, sol.coeffs, spec.p_max));
            const double logdet = std::log(cov.determinant());
            const double k = static_cast<double>(p * r * r);
            const double penalty = spec.criterion == OrderCriterion::aic
                                       ? 2.0 * k / static_cast<double>(t_eff)
                                       : std::log(static_cast<double>(t_eff)) * k / static_cast<double>(t_eff);
            score = logdet + penalty;
            if (std::isnan(score)) score = std::numeric_limits<double>::infinity();
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::singular_system) throw;
        }
        spec.scores.push_back(score);
        if (score < best) {
            best = score;
            spec.chosen_p = p;
        }
    }
    if (spec.chosen_p == 0) fail(ErrorKind::singular_system, "select_order: every candidate order is singular");
    return spec;
}

[[nodiscard]] inline Stability stability_check(const VarSieveModel& model) noexcept {
    if (model.spectral_radius < 0.999) return Stability::stable;
    if (model.spectral_radius <= 1.0) return Stability::marginal;
    return Stability::explosive;
}

}  // namespace arsieve
