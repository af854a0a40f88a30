#pragma once

/** @file
 * Target statistics, bootstrap intervals, interval scores and coverage
 * aggregation.
 *
 * Standardised statistics:
 *   mean statistic      theta = sqrt(T) / sqrt(N^nu) * c^T Q fbar
 *   spiked eigenvalue   delta_i = lambda_i / N^2, delta0_i = sqrt(T) lambda_i / N^2
 * where lambda_i is the i-th largest eigenvalue of G(k) G(k)^T for the lag-k
 * sample autocovariance G(k).
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arsieve/error.hpp"
#include "arsieve/panel.hpp"

namespace arsieve {

// ---------------------------------------------------------------------------
// Statistics

enum class StatisticKind { mean_statistic, spiked_eigenvalue, mean_vector, autocov_surface };

struct StatisticId {
    StatisticKind kind = StatisticKind::mean_statistic;
    double nu = 1.0;           ///< strength exponent (mean statistic)
    Vector weights;            ///< c; empty means all ones
    Eigen::Index lag = 1;      ///< k (eigenvalue, surface)
    Eigen::Index index = 1;    ///< i, 1-based (eigenvalue)
    bool standardize = true;   ///< delta0 rather than delta

    [[nodiscard]] static StatisticId mean(double nu = 1.0) {
        StatisticId s;
        s.kind = StatisticKind::mean_statistic;
        s.nu = nu;
        return s;
    }
    [[nodiscard]] static StatisticId eigen(Eigen::Index index, Eigen::Index lag = 1, bool standardize = true) {
        StatisticId s;
        s.kind = StatisticKind::spiked_eigenvalue;
        s.index = index;
        s.lag = lag;
        s.standardize = standardize;
        return s;
    }
    [[nodiscard]] static StatisticId mean_vector() {
        StatisticId s;
        s.kind = StatisticKind::mean_vector;
        return s;
    }
    [[nodiscard]] static StatisticId autocov_surface(Eigen::Index lag) {
        StatisticId s;
        s.kind = StatisticKind::autocov_surface;
        s.lag = lag;
        return s;
    }

    [[nodiscard]] std::string name() const {
        switch (kind) {
        case StatisticKind::mean_statistic: return "mean";
        case StatisticKind::spiked_eigenvalue: {
            std::string s = "eig" + std::to_string(index);
            if (lag != 1) s += "_lag" + std::to_string(lag);
            if (!standardize) s += "_raw";
            return s;
        }
        case StatisticKind::mean_vector: return "mean_vector";
        case StatisticKind::autocov_surface: return "autocov_lag" + std::to_string(lag);
        }
        return "unknown";
    }

    /// Parses "mean", "eig<i>[_lag<k>][_raw]", "mean_vector", "autocov_lag<k>".
    [[nodiscard]] static StatisticId parse(const std::string& text, double nu = 1.0) {
        auto bad = [&] { fail(ErrorKind::invalid_input, "unknown statistic '" + text + "'"); };
        auto parse_int = [&](const std::string& s) -> Eigen::Index {
            if (s.empty() || !std::all_of(s.begin(), s.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) bad();
            return static_cast<Eigen::Index>(std::stol(s));
        };
        if (text == "mean") return mean(nu);
        if (text == "mean_vector") return mean_vector();
        if (text.rfind("autocov_lag", 0) == 0) return autocov_surface(parse_int(text.substr(11)));
        if (text.rfind("eig", 0) == 0) {
            std::string rest = text.substr(3);
            bool standardize = true;
            if (rest.size() > 4 && rest.substr(rest.size() - 4) == "_raw") {
                standardize = false;
                rest.resize(rest.size() - 4);
            }
            Eigen::Index lag = 1;
            if (auto pos = rest.find("_lag"); pos != std::string::npos) {
                lag = parse_int(rest.substr(pos + 4));
                rest.resize(pos);
            }
            const Eigen::Index idx = parse_int(rest);
            if (idx < 1 || lag < 1) bad();
            return eigen(idx, lag, standardize);
        }
        bad();
        return {};
    }
};

inline void check_nu(double nu) {
    require(nu > 0.0 && nu <= 1.0, ErrorKind::invalid_input,
            "factor strength nu = " + format_double(nu) + " outside the valid range (0, 1]");
}

/// sqrt(T)/sqrt(N^nu) for the mean statistic.
[[nodiscard]] inline double mean_statistic_scale(Eigen::Index T, Eigen::Index N, double nu) {
    check_nu(nu);
    return std::sqrt(static_cast<double>(T)) / std::sqrt(std::pow(static_cast<double>(N), nu));
}

/// theta = sqrt(T)/sqrt(N^nu) * c^T Q fbar. An empty `c` means all ones.
[[nodiscard]] inline double mean_statistic(const Matrix& Q, const Vector& fbar, Eigen::Index T, double nu,
                                           const Vector& c = Vector()) {
    const double scale = mean_statistic_scale(T, Q.rows(), nu);
    require(fbar.size() == Q.cols(), ErrorKind::invalid_input, "mean_statistic: factor mean has wrong length");
    if (c.size() == 0) return scale * (Q.transpose() * Vector::Ones(Q.rows())).dot(fbar);
    require(c.size() == Q.rows(), ErrorKind::invalid_input, "mean_statistic: weight vector must have length N");
    return scale * (Q.transpose() * c).dot(fbar);
}

/// Scale applied to raw eigenvalues of G G^T: 1/N^2, times sqrt(T) if standardised.
[[nodiscard]] inline double eigen_scale(Eigen::Index T, Eigen::Index N, bool standardize) {
    const double n2 = static_cast<double>(N) * static_cast<double>(N);
    return (standardize ? std::sqrt(static_cast<double>(T)) : 1.0) / n2;
}

/// Top `count` eigenvalues (descending) of G(k) G(k)^T from a panel, scaled.
[[nodiscard]] inline std::vector<double> spiked_eigenvalues(const Matrix& values, Eigen::Index k, Eigen::Index count,
                                                            bool standardize) {
    const Eigen::Index N = values.rows();
    require(count >= 1 && count <= N, ErrorKind::invalid_input,
            "spiked_eigenvalue: index " + std::to_string(count) + " exceeds N = " + std::to_string(N));
    const Matrix G = sample_autocov(values, k);
    const Matrix S = G * G.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
    require(solver.info() == Eigen::Success, ErrorKind::numeric_failure,
            "eigenvalues did not converge for a " + std::to_string(N) + "x" + std::to_string(N) + " matrix");
    const double scale = eigen_scale(values.cols(), N, standardize);
    std::vector<double> out(static_cast<std::size_t>(count));
    for (Eigen::Index j = 0; j < count; ++j) out[static_cast<std::size_t>(j)] = scale * std::max(0.0, solver.eigenvalues()(N - 1 - j));
    return out;
}

[[nodiscard]] inline double spiked_eigenvalue(const Matrix& values, Eigen::Index k, Eigen::Index i, bool standardize) {
    return spiked_eigenvalues(values, k, i, standardize).back();
}

/**
 * Same quantity for a panel y = Q f without materialising it. With
 * G_f the lag-k autocovariance of f and Q^T Q = L L^T, the non-zero
 * eigenvalues of (Q G_f Q^T)(Q G_f Q^T)^T are those of L^T G_f^T Q^T Q G_f L.
 */
[[nodiscard]] inline std::vector<double> spiked_eigenvalues_factor(const Matrix& f, const Matrix& Q, Eigen::Index k,
                                                                   Eigen::Index count, bool standardize) {
    const Eigen::Index N = Q.rows();
    const Eigen::Index r = Q.cols();
    require(count >= 1 && count <= N, ErrorKind::invalid_input,
            "spiked_eigenvalue: index " + std::to_string(count) + " exceeds N = " + std::to_string(N));
    const Matrix Gf = sample_autocov(f, k);
    const Matrix gram = Q.transpose() * Q;
    Eigen::LLT<Matrix> llt(gram);
    require(llt.info() == Eigen::Success, ErrorKind::numeric_failure, "loading Gram matrix is not positive definite");
    const Matrix L = llt.matrixL();
    const Matrix M = L.transpose() * Gf.transpose() * gram * Gf * L;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    const double scale = eigen_scale(f.cols(), N, standardize);
    std::vector<double> out(static_cast<std::size_t>(count), 0.0);
    for (Eigen::Index j = 0; j < std::min(count, r); ++j)
        out[static_cast<std::size_t>(j)] = scale * std::max(0.0, solver.eigenvalues()(r - 1 - j));
    return out;
}

// ---------------------------------------------------------------------------
// Quantiles

/// Linear interpolation between order statistics: h = (n-1)p + 1,
/// x_floor(h) + (h - floor(h)) (x_floor(h)+1 - x_floor(h)), 1-based, x_{n+1} = x_n.
[[nodiscard]] inline double quantile_sorted(std::span<const double> sorted, double p) {
    require(!sorted.empty(), ErrorKind::invalid_input, "empirical_quantile: no samples");
    require(p >= 0.0 && p <= 1.0, ErrorKind::invalid_input, "empirical_quantile: probability outside [0, 1]");
    const std::size_t n = sorted.size();
    const double h = static_cast<double>(n - 1) * p + 1.0;
    const double fl = std::floor(h);
    const std::size_t lo = static_cast<std::size_t>(fl);  // 1-based
    const double x_lo = sorted[lo - 1];
    const double x_hi = lo < n ? sorted[lo] : sorted[n - 1];
    return x_lo + (h - fl) * (x_hi - x_lo);
}

[[nodiscard]] inline double empirical_quantile(std::span<const double> samples, double p) {
    require(!samples.empty(), ErrorKind::invalid_input, "empirical_quantile: no samples");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    return quantile_sorted(sorted, p);
}

/**
 * Standard normal quantile. Acklam's rational approximation followed by one
 * Halley step against erfc, giving |error| well below 1e-12 on (0, 1).
 */
[[nodiscard]] inline double normal_quantile(double p) {
    require(p > 0.0 && p < 1.0, ErrorKind::invalid_input, "normal_quantile: probability outside (0, 1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x = 0.0;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

// ---------------------------------------------------------------------------
// Intervals

enum class IntervalKind { reverse_percentile, normal, unreversed_percentile };

[[nodiscard]] inline std::string to_string(IntervalKind k) {
    switch (k) {
    case IntervalKind::reverse_percentile: return "reverse_percentile";
    case IntervalKind::normal: return "normal";
    case IntervalKind::unreversed_percentile: return "unreversed_percentile";
    }
    return "unknown";
}

/// Accepts the canonical names plus the short forms reverse/normal/unreversed.
[[nodiscard]] inline IntervalKind parse_interval_kind(const std::string& s) {
    if (s == "reverse_percentile" || s == "reverse" || s == "reverse-percentile") return IntervalKind::reverse_percentile;
    if (s == "normal") return IntervalKind::normal;
    if (s == "unreversed_percentile" || s == "unreversed" || s == "unreversed-percentile" || s == "percentile")
        return IntervalKind::unreversed_percentile;
    fail(ErrorKind::invalid_input, "unknown interval kind '" + s + "'");
}

struct IntervalEstimate {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
    IntervalKind kind = IntervalKind::reverse_percentile;

    [[nodiscard]] double width() const noexcept { return upper - lower; }
    [[nodiscard]] bool covers(double theta) const noexcept { return lower <= theta && theta <= upper; }
};

inline void check_alpha(double alpha) {
    require(alpha > 0.0 && alpha < 1.0, ErrorKind::invalid_input,
            "alpha = " + std::to_string(alpha) + " outside (0, 1)");
}

namespace detail {

inline std::vector<double> sorted_copy(std::span<const double> samples) {
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    return s;
}

}  // namespace detail

/// Basic bootstrap interval (2 theta - q_{1-alpha/2}, 2 theta - q_{alpha/2}).
[[nodiscard]] inline IntervalEstimate reverse_percentile_interval(double theta_hat, std::span<const double> samples,
                                                                  double alpha) {
    check_alpha(alpha);
    require(samples.size() >= 20, ErrorKind::invalid_input, "reverse_percentile_interval: need at least 20 samples");
    const auto s = detail::sorted_copy(samples);
    return {2.0 * theta_hat - quantile_sorted(s, 1.0 - alpha / 2.0), 2.0 * theta_hat - quantile_sorted(s, alpha / 2.0),
            1.0 - alpha, IntervalKind::reverse_percentile};
}

/// theta - b -/+ sqrt(v) z_{1-alpha/2}; b = mean - theta, v with divisor B-1.
[[nodiscard]] inline IntervalEstimate normal_interval(double theta_hat, std::span<const double> samples, double alpha) {
    check_alpha(alpha);
    require(samples.size() >= 2, ErrorKind::invalid_input, "normal_interval: need at least 2 samples");
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    const double bias = mean - theta_hat;
    const double half = sd * normal_quantile(1.0 - alpha / 2.0);
    const double centre = theta_hat - bias;
    return {centre - half, centre + half, 1.0 - alpha, IntervalKind::normal};
}

/// Plain percentile interval (q_{alpha/2}, q_{1-alpha/2}).
[[nodiscard]] inline IntervalEstimate unreversed_percentile_interval(std::span<const double> samples, double alpha) {
    check_alpha(alpha);
    require(samples.size() >= 20, ErrorKind::invalid_input, "unreversed_percentile_interval: need at least 20 samples");
    const auto s = detail::sorted_copy(samples);
    return {quantile_sorted(s, alpha / 2.0), quantile_sorted(s, 1.0 - alpha / 2.0), 1.0 - alpha,
            IntervalKind::unreversed_percentile};
}

[[nodiscard]] inline IntervalEstimate make_interval(IntervalKind kind, double theta_hat, std::span<const double> samples,
                                                    double level) {
    const double alpha = 1.0 - level;
    switch (kind) {
    case IntervalKind::reverse_percentile: return reverse_percentile_interval(theta_hat, samples, alpha);
    case IntervalKind::normal: return normal_interval(theta_hat, samples, alpha);
    case IntervalKind::unreversed_percentile: return unreversed_percentile_interval(samples, alpha);
    }
    fail(ErrorKind::invalid_input, "unknown interval kind");
}

/// S_alpha = (u - l) + (2/alpha)(l - theta)[theta < l] + (2/alpha)(theta - u)[theta > u].
[[nodiscard]] inline double interval_score(double lower, double upper, double theta, double alpha) {
    check_alpha(alpha);
    require(lower <= upper, ErrorKind::invalid_input, "interval_score: lower bound exceeds upper bound");
    double s = upper - lower;
    if (theta < lower) s += 2.0 / alpha * (lower - theta);
    if (theta > upper) s += 2.0 / alpha * (theta - upper);
    return s;
}

// ---------------------------------------------------------------------------
// Coverage

struct CoverageRow {
    Eigen::Index T = 0;
    Eigen::Index N = 0;
    double level = 0.95;
    double coverage = 0.0;
    double width = 0.0;
    double score = 0.0;
    IntervalKind kind = IntervalKind::reverse_percentile;
    std::string statistic;
    double nu = 1.0;
    std::size_t M = 0;
    std::size_t failures = 0;
};

/// Coverage, mean width and mean interval score over replications.
[[nodiscard]] inline CoverageRow aggregate_coverage(std::span<const IntervalEstimate> intervals, double truth) {
    require(!intervals.empty(), ErrorKind::invalid_input, "aggregate_coverage: no replications");
    CoverageRow row;
    row.level = intervals.front().level;
    row.kind = intervals.front().kind;
    std::size_t covered = 0;
    double width = 0.0, score = 0.0;
    for (const auto& iv : intervals) {
        if (iv.covers(truth)) ++covered;
        width += iv.width();
        score += interval_score(iv.lower, iv.upper, truth, 1.0 - iv.level);
    }
    const double m = static_cast<double>(intervals.size());
    row.M = intervals.size();
    row.coverage = static_cast<double>(covered) / m;
    row.width = width / m;
    row.score = score / m;
    return row;
}

}  // namespace arsieve
