#pragma once

/** @file
 * JSON views of fitted models and simulation truth records.
 */

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "arsieve/bootstrap.hpp"
#include "arsieve/factor.hpp"
#include "arsieve/sim.hpp"
#include "arsieve/var_sieve.hpp"

namespace arsieve {

using Json = nlohmann::ordered_json;

[[nodiscard]] inline Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

[[nodiscard]] inline Json vector_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

/// Model report: spectrum head, ratio path, factor count, VAR order and fit summary.
[[nodiscard]] inline Json estimate_report(const PipelineFit& pf, Eigen::Index head = 10) {
    const FactorModelFit& fit = pf.fit;
    Json j;
    j["N"] = fit.loadings.N();
    j["T"] = fit.factors.T();
    j["k0"] = fit.k0;
    j["r"] = fit.r;
    j["r_estimated"] = fit.r_estimated;
    j["R"] = fit.R;
    const Eigen::Index h = std::min(head, fit.spectrum.eigenvalues.size());
    j["eigenvalues"] = vector_json(fit.spectrum.eigenvalues.head(h));
    Json ratios = Json::array();
    for (double x : fit.ratio_path) ratios.push_back(x);
    j["ratio_path"] = ratios;
    Json order;
    order["criterion"] = to_string(pf.order.criterion);
    order["p"] = pf.model.p;
    order["p_max"] = pf.order.p_max;
    Json scores = Json::array();
    for (double s : pf.order.scores) scores.push_back(s);
    order["scores"] = scores;
    j["order"] = order;
    Json norms = Json::array();
    for (const auto& A : pf.model.coeffs) norms.push_back(A.norm());
    j["coefficient_norms"] = norms;
    j["spectral_radius"] = pf.model.spectral_radius;
    j["stability"] = to_string(stability_check(pf.model));
    j["ridge"] = pf.model.ridge;
    j["factor_mean"] = vector_json(pf.model.factor_mean);
    j["residual_cov"] = matrix_json(pf.model.residual_cov);
    Json warnings = Json::array();
    for (const auto& w : pf.warnings) warnings.push_back(w);
    j["warnings"] = warnings;
    return j;
}

[[nodiscard]] inline Json truth_report(const DgpSpec& spec, const SimulationTruth& truth) {
    Json j;
    j["dgp"] = to_string(spec.kind);
    j["N"] = spec.N;
    j["T"] = spec.T;
    j["nu"] = spec.nu;
    j["seed"] = spec.seed;
    j["r"] = truth.loadings.cols();
    j["coefficient"] = matrix_json(truth.coefficient);
    j["innovation_cov"] = matrix_json(truth.innovation_cov);
    j["factor_cov0"] = matrix_json(truth.factor_cov0);
    j["factor_autocov_lag1"] = matrix_json(truth.factor_autocov(1));
    j["mean_statistic"] = truth.mean_statistic();
    Json delta = Json::array(), delta0 = Json::array();
    const Eigen::Index r = truth.loadings.cols();
    for (double x : truth.spiked_eigenvalues_population(1, r, false, spec.T)) delta.push_back(x);
    for (double x : truth.spiked_eigenvalues_population(1, r, true, spec.T)) delta0.push_back(x);
    j["spiked_eigenvalues_lag1"] = delta;
    j["spiked_eigenvalues_lag1_standardized"] = delta0;
    j["loadings"] = matrix_json(truth.loadings);
    return j;
}

}  // namespace arsieve
