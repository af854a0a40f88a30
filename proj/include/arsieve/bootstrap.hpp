#pragma once

/** @file
 * AR-sieve bootstrap on estimated factors.
 *
 * Replicate b draws from its own generator seeded with
 * stable_mix(root_seed, b): first T + burn_in residual indices, then (for the
 * noise-augmented variant) a second generator seeded with
 * stable_mix(sub_seed, 1) supplies the N x T normal matrix column by column.
 */

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arsieve/error.hpp"
#include "arsieve/factor.hpp"
#include "arsieve/inference.hpp"
#include "arsieve/panel.hpp"
#include "arsieve/parallel.hpp"
#include "arsieve/rng.hpp"
#include "arsieve/var_sieve.hpp"

namespace arsieve {

enum class BootstrapVariant { factor_only, noise_augmented };

/// How replicate statistics are evaluated.
///  factor_level: from f* and the original loadings (no N x T panel built)
///  panel:        from the reconstructed panel y* (or y**)
///  reestimate:   refit the factor model on y* before computing the statistic
enum class StatisticMode { factor_level, panel, reestimate };

enum class NoiseCovMethod { diagonal, hard_threshold };

struct BootstrapConfig {
    std::size_t B = 999;
    std::uint64_t root_seed = 0;
    std::optional<Eigen::Index> burn_in;  ///< default 50 + 10 p, doubled when marginal
    BootstrapVariant variant = BootstrapVariant::factor_only;
    StatisticMode mode = StatisticMode::factor_level;
    NoiseCovMethod noise_method = NoiseCovMethod::diagonal;
    double threshold = 0.5;
    std::vector<double> levels{0.95};
    std::vector<StatisticId> statistics{StatisticId::mean()};
    unsigned threads = 1;
};

struct BootstrapReplicate {
    std::size_t index = 0;
    std::uint64_t sub_seed = 0;
    std::vector<std::vector<double>> statistics;  ///< aligned with BootstrapConfig::statistics
};

struct NoiseCovEstimate {
    Matrix matrix;
    Matrix sqrt;  ///< symmetric PSD square root
    NoiseCovMethod method = NoiseCovMethod::diagonal;
};

/// e_t - ebar over the residual columns.
[[nodiscard]] inline Matrix center_residuals(const Matrix& residuals) {
    require(residuals.cols() >= 2, ErrorKind::invalid_input, "center_residuals: need at least two residual vectors");
    return residuals.colwise() - residuals.rowwise().mean();
}

/// Whole residual columns drawn uniformly with replacement.
[[nodiscard]] inline Matrix resample_innovations(const Matrix& centered, Eigen::Index count, SeededGenerator& gen) {
    require(count >= 1, ErrorKind::invalid_input, "resample_innovations: count must be positive");
    require(centered.cols() >= 1, ErrorKind::invalid_input, "resample_innovations: empty residual pool");
    Matrix out(centered.rows(), count);
    const auto pool = static_cast<std::uint64_t>(centered.cols());
    for (Eigen::Index t = 0; t < count; ++t)
        out.col(t) = centered.col(static_cast<Eigen::Index>(draw_uniform_index(gen, pool)));
    return out;
}

[[nodiscard]] inline Matrix resample_innovations(const Matrix& centered, Eigen::Index count, std::uint64_t sub_seed) {
    SeededGenerator gen(sub_seed);
    return resample_innovations(centered, count, gen);
}

[[nodiscard]] inline Eigen::Index default_burn_in(const VarSieveModel& model) {
    Eigen::Index burn = 50 + 10 * model.p;
    if (stability_check(model) == Stability::marginal) burn *= 2;
    return burn;
}

/**
 * f*_t = sum_l A_l f*_{t-l} + e*_t from p zero start vectors; the first
 * burn_in outputs are dropped and factor_mean is added to every column.
 */
[[nodiscard]] inline FactorSeries generate_factor_path(const VarSieveModel& model, const Matrix& innovations,
                                                       Eigen::Index T, Eigen::Index burn_in) {
    require(stability_check(model) != Stability::explosive, ErrorKind::refuse_to_generate,
            "VAR model is explosive (spectral radius " + std::to_string(model.spectral_radius) + ")");
    require(T >= 1 && burn_in >= 0, ErrorKind::invalid_input, "generate_factor_path: bad length or burn-in");
    require(innovations.cols() >= T + burn_in, ErrorKind::invalid_input,
            "generate_factor_path: need at least T + burn_in innovations");
    const Eigen::Index r = model.r();
    require(innovations.rows() == r, ErrorKind::invalid_input, "generate_factor_path: innovation dimension mismatch");
    const Eigen::Index p = model.p;
    const Eigen::Index total = T + burn_in;
    Matrix path = Matrix::Zero(r, total + p);
    for (Eigen::Index t = 0; t < total; ++t) {
        auto x = path.col(t + p);
        x = innovations.col(t);
        for (Eigen::Index l = 1; l <= p; ++l) x.noalias() += model.coeffs[static_cast<std::size_t>(l - 1)] * path.col(t + p - l);
    }
    Matrix out = path.rightCols(T).colwise() + model.factor_mean;
    return FactorSeries(std::move(out));
}

/// y*_t = Q f*_t.
[[nodiscard]] inline PanelSeries reconstruct_panel(const FactorSeries& f, const LoadingMatrix& loadings) {
    require(f.r() == loadings.r(), ErrorKind::invalid_input, "reconstruct_panel: factor and loading ranks differ");
    return PanelSeries(loadings.Q * f.values());
}

/// Symmetric square root of a PSD matrix; negative eigenvalues beyond
/// roundoff (1e-10 relative) are rejected.
[[nodiscard]] inline Matrix psd_sqrt(const Matrix& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (S + S.transpose()));
    require(solver.info() == Eigen::Success, ErrorKind::numeric_failure, "psd_sqrt: eigendecomposition failed");
    const Vector ev = solver.eigenvalues();
    const double top = std::max(ev.cwiseAbs().maxCoeff(), 0.0);
    require(ev.minCoeff() >= -1e-10 * std::max(top, 1e-300), ErrorKind::invalid_input,
            "noise covariance is not positive semi-definite");
    const Vector root = ev.cwiseMax(0.0).cwiseSqrt();
    return solver.eigenvectors() * root.asDiagonal() * solver.eigenvectors().transpose();
}

/**
 * Sigma_u from u_t = y_t - Q f_t (sample covariance, divisor T - 1).
 * hard_threshold zeroes off-diagonal entries with |s_ij| < tau sqrt(s_ii s_jj)
 * and clips negative eigenvalues to zero.
 */
[[nodiscard]] inline NoiseCovEstimate estimate_noise_cov(const Matrix& panel, const LoadingMatrix& loadings,
                                                         const FactorSeries& factors, NoiseCovMethod method,
                                                         double tau = 0.5) {
    require(panel.rows() == loadings.N() && factors.T() == panel.cols(), ErrorKind::invalid_input,
            "estimate_noise_cov: dimension mismatch");
    require(panel.cols() >= 2, ErrorKind::invalid_input, "estimate_noise_cov: need at least two time points");
    const Matrix u = panel - loadings.Q * factors.values();
    const Matrix c = u.colwise() - u.rowwise().mean();
    Matrix S = c * c.transpose() / static_cast<double>(panel.cols() - 1);
    S = 0.5 * (S + S.transpose());
    NoiseCovEstimate out;
    out.method = method;
    if (method == NoiseCovMethod::diagonal) {
        out.matrix = S.diagonal().asDiagonal();
        out.sqrt = out.matrix.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
        return out;
    }
    for (Eigen::Index j = 0; j < S.cols(); ++j)
        for (Eigen::Index i = 0; i < S.rows(); ++i)
            if (i != j && std::abs(S(i, j)) < tau * std::sqrt(S(i, i) * S(j, j))) S(i, j) = 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(S);
    require(solver.info() == Eigen::Success, ErrorKind::numeric_failure, "noise covariance eigendecomposition failed");
    const Vector ev = solver.eigenvalues().cwiseMax(0.0);
    out.matrix = solver.eigenvectors() * ev.asDiagonal() * solver.eigenvectors().transpose();
    out.matrix = 0.5 * (out.matrix + out.matrix.transpose());
    out.sqrt = solver.eigenvectors() * ev.cwiseSqrt().asDiagonal() * solver.eigenvectors().transpose();
    return out;
}

/// y**_t = Q f*_t + Sigma^{1/2} u_t, u_t i.i.d. N(0, I).
[[nodiscard]] inline PanelSeries reconstruct_panel_noise_augmented(const FactorSeries& f, const LoadingMatrix& loadings,
                                                                   const NoiseCovEstimate& noise, std::uint64_t sub_seed) {
    require(noise.sqrt.rows() == loadings.N(), ErrorKind::invalid_input, "noise covariance has wrong dimension");
    SeededGenerator gen(sub_seed);
    Matrix z(loadings.N(), f.T());
    for (Eigen::Index t = 0; t < z.cols(); ++t)
        for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, t) = draw_standard_normal(gen);
    return PanelSeries(loadings.Q * f.values() + noise.sqrt * z);
}

[[nodiscard]] inline NoiseCovEstimate make_noise_cov(const Matrix& sigma) {
    NoiseCovEstimate out;
    out.matrix = sigma;
    out.sqrt = psd_sqrt(sigma);
    return out;
}

// ---------------------------------------------------------------------------
// Statistic evaluation

/// Values of `stat` on a panel whose factor structure is (Q, f).
[[nodiscard]] inline std::vector<double> statistic_from_factors(const StatisticId& stat, const Matrix& Q, const Matrix& f) {
    const Eigen::Index T = f.cols();
    switch (stat.kind) {
    case StatisticKind::mean_statistic:
        return {mean_statistic(Q, f.rowwise().mean(), T, stat.nu, stat.weights)};
    case StatisticKind::spiked_eigenvalue:
        return {spiked_eigenvalues_factor(f, Q, stat.lag, stat.index, stat.standardize).back()};
    case StatisticKind::mean_vector: {
        const Vector m = Q * f.rowwise().mean();
        return {m.data(), m.data() + m.size()};
    }
    case StatisticKind::autocov_surface: {
        const Matrix s = Q * sample_autocov(f, stat.lag) * Q.transpose();
        return {s.data(), s.data() + s.size()};
    }
    }
    return {};
}

/// Values of `stat` computed directly from panel data.
[[nodiscard]] inline std::vector<double> statistic_from_panel(const StatisticId& stat, const Matrix& y) {
    const Eigen::Index T = y.cols();
    const Eigen::Index N = y.rows();
    switch (stat.kind) {
    case StatisticKind::mean_statistic: {
        const double scale = mean_statistic_scale(T, N, stat.nu);
        const Vector ybar = y.rowwise().mean();
        if (stat.weights.size() == 0) return {scale * ybar.sum()};
        require(stat.weights.size() == N, ErrorKind::invalid_input, "mean statistic weights must have length N");
        return {scale * stat.weights.dot(ybar)};
    }
    case StatisticKind::spiked_eigenvalue:
        return {spiked_eigenvalue(y, stat.lag, stat.index, stat.standardize)};
    case StatisticKind::mean_vector: {
        const Vector m = y.rowwise().mean();
        return {m.data(), m.data() + m.size()};
    }
    case StatisticKind::autocov_surface: {
        const Matrix s = sample_autocov(y, stat.lag);
        return {s.data(), s.data() + s.size()};
    }
    }
    return {};
}

/**
 * Sample counterpart theta-hat of each statistic on the observed data: the
 * mean statistic and mean vector use the fitted Q f-bar, eigenvalues and the
 * autocovariance surface use the raw panel.
 */
[[nodiscard]] inline std::vector<double> sample_statistic(const StatisticId& stat, const Matrix& panel,
                                                          const FactorModelFit& fit) {
    switch (stat.kind) {
    case StatisticKind::mean_statistic:
    case StatisticKind::mean_vector:
        return statistic_from_factors(stat, fit.loadings.Q, fit.factors.values());
    case StatisticKind::spiked_eigenvalue:
    case StatisticKind::autocov_surface:
        return statistic_from_panel(stat, panel);
    }
    return {};
}

// ---------------------------------------------------------------------------
// Pipeline

struct PipelineOptions {
    FactorOptions factor;
    OrderSelection order;
};

struct PipelineFit {
    FactorModelFit fit;
    OrderSelection order;
    VarSieveModel model;
    bool degenerate = false;
    std::vector<std::string> warnings;
};

/**
 * Factor model, order selection and Yule-Walker fit. Panels with no
 * temporal variation (all-zero accumulated autocovariance or constant
 * factors) produce a zero VAR(1) with zero residuals and a warning.
 */
[[nodiscard]] inline PipelineFit fit_pipeline(const Matrix& panel, const PipelineOptions& options) {
    PipelineFit out;
    FactorOptions fopt = options.factor;
    if (!fopt.r && panel.rows() < 2) {
        fopt.r = 1;
        out.warnings.push_back("N = 1: number of factors forced to 1");
    }
    try {
        out.fit = fit_factor_model(panel, fopt);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::degenerate_spectrum) throw;
        fopt.r = fopt.r.value_or(1);
        out.fit = fit_factor_model(panel, fopt);
        out.degenerate = true;
        out.warnings.push_back("degenerate data: accumulated autocovariance is zero");
    }
    const Matrix& f = out.fit.factors.values();
    const Vector mean = f.rowwise().mean();
    const double spread = (f.colwise() - mean).cwiseAbs().maxCoeff();
    if (out.degenerate || spread <= 1e-12 * (1.0 + mean.cwiseAbs().maxCoeff())) {
        if (!out.degenerate) out.warnings.push_back("degenerate data: estimated factors are constant");
        out.degenerate = true;
        const Eigen::Index r = f.rows();
        out.order = options.order;
        out.order.criterion = OrderCriterion::fixed;
        out.order.chosen_p = 1;
        out.order.scores.clear();
        out.model = make_var_model({Matrix::Zero(r, r)}, mean);
        out.model.residuals = Matrix::Zero(r, f.cols() - 1);
        return out;
    }
    out.order = select_order(out.fit.factors, options.order);
    out.model = yule_walker_fit(out.fit.factors, out.order.chosen_p);
    if (stability_check(out.model) == Stability::marginal)
        out.warnings.push_back("VAR fit is marginally stable (spectral radius " +
                               std::to_string(out.model.spectral_radius) + "); burn-in doubled");
    return out;
}

/// Bootstrap factor path f* of length T driven by the generator seeded with sub_seed.
[[nodiscard]] inline FactorSeries bootstrap_factor_path(const VarSieveModel& model, const Matrix& centered, Eigen::Index T,
                                                        Eigen::Index burn_in, std::uint64_t sub_seed) {
    return generate_factor_path(model, resample_innovations(centered, T + burn_in, sub_seed), T, burn_in);
}

/// One bootstrap replicate. Exposed for tests; run_bootstrap calls it for each index.
[[nodiscard]] inline BootstrapReplicate bootstrap_replicate(const Matrix& panel, const FactorModelFit& fit,
                                                            const VarSieveModel& model, const Matrix& centered,
                                                            const BootstrapConfig& config, const NoiseCovEstimate* noise,
                                                            std::size_t index) {
    BootstrapReplicate rep;
    rep.index = index;
    rep.sub_seed = stable_mix(config.root_seed, index);
    const Eigen::Index burn = config.burn_in.value_or(default_burn_in(model));
    const FactorSeries fstar = bootstrap_factor_path(model, centered, panel.cols(), burn, rep.sub_seed);
    const Matrix& Q = fit.loadings.Q;

    rep.statistics.reserve(config.statistics.size());
    const bool need_panel = config.variant == BootstrapVariant::noise_augmented || config.mode != StatisticMode::factor_level;
    if (!need_panel) {
        for (const auto& stat : config.statistics) rep.statistics.push_back(statistic_from_factors(stat, Q, fstar.values()));
        return rep;
    }
    const PanelSeries ystar = config.variant == BootstrapVariant::noise_augmented
                                  ? reconstruct_panel_noise_augmented(fstar, fit.loadings, *noise, stable_mix(rep.sub_seed, 1))
                                  : reconstruct_panel(fstar, fit.loadings);
    std::optional<FactorModelFit> refit;
    if (config.mode == StatisticMode::reestimate) {
        FactorOptions fo;
        fo.k0 = fit.k0;
        fo.r = fit.r;
        refit = fit_factor_model(ystar.values(), fo);
    }
    for (const auto& stat : config.statistics) {
        const bool factor_stat = stat.kind == StatisticKind::mean_statistic || stat.kind == StatisticKind::mean_vector;
        if (refit && factor_stat)
            rep.statistics.push_back(statistic_from_factors(stat, refit->loadings.Q, refit->factors.values()));
        else
            rep.statistics.push_back(statistic_from_panel(stat, ystar.values()));
    }
    return rep;
}

/// B replicates ordered by index; identical output for any thread count.
[[nodiscard]] inline std::vector<BootstrapReplicate> run_bootstrap(const Matrix& panel, const FactorModelFit& fit,
                                                                   const VarSieveModel& model, const BootstrapConfig& config) {
    require(config.B >= 1, ErrorKind::invalid_input, "bootstrap: B must be at least 1");
    require(fit.loadings.N() == panel.rows() && fit.factors.T() == panel.cols() && model.r() == fit.r,
            ErrorKind::invalid_input, "bootstrap: panel, factor fit and VAR model are inconsistent");
    for (double level : config.levels)
        require(level > 0.0 && level < 1.0, ErrorKind::invalid_input, "bootstrap: level outside (0, 1)");
    const Matrix centered = center_residuals(model.residuals);
    std::optional<NoiseCovEstimate> noise;
    if (config.variant == BootstrapVariant::noise_augmented)
        noise = estimate_noise_cov(panel, fit.loadings, fit.factors, config.noise_method, config.threshold);

    std::vector<BootstrapReplicate> out(config.B);
    parallel_for(config.B, config.threads, [&](std::size_t b) {
        try {
            out[b] = bootstrap_replicate(panel, fit, model, centered, config, noise ? &*noise : nullptr, b);
        } catch (const Error& e) {
            throw Error(e.kind(), "replicate " + std::to_string(b) + ": " + e.what());
        }
    });
    return out;
}

/// Scalar column j of statistic s across replicates.
[[nodiscard]] inline std::vector<double> replicate_column(const std::vector<BootstrapReplicate>& reps, std::size_t s,
                                                          std::size_t j = 0) {
    std::vector<double> out;
    out.reserve(reps.size());
    for (const auto& rep : reps) out.push_back(rep.statistics[s][j]);
    return out;
}

}  // namespace arsieve
