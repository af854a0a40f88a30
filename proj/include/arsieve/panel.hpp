#pragma once

/** @file
 * Panel data types, sample moments and CSV interchange.
 *
 * A panel is stored as an N x T Eigen matrix: one row per cross-sectional
 * coordinate, one column per time point. Eigen's column-major layout keeps
 * each time slice contiguous.
 */

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arsieve/error.hpp"

namespace arsieve {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace detail

/// Observed N x T panel {y_t}.
class PanelSeries {
public:
    PanelSeries() = default;

    explicit PanelSeries(Matrix values) : values_(std::move(values)) {
        require(values_.rows() >= 1, ErrorKind::invalid_input, "panel must have at least one row");
        require(values_.cols() >= 2, ErrorKind::invalid_input, "panel must have at least two time points");
        require(detail::all_finite(values_), ErrorKind::invalid_input, "panel contains non-finite values");
    }

    [[nodiscard]] const Matrix& values() const noexcept { return values_; }
    [[nodiscard]] Eigen::Index N() const noexcept { return values_.rows(); }
    [[nodiscard]] Eigen::Index T() const noexcept { return values_.cols(); }

private:
    Matrix values_;
};

/// r x T factor series (true, estimated or bootstrap).
class FactorSeries {
public:
    FactorSeries() = default;

    explicit FactorSeries(Matrix values) : values_(std::move(values)) {
        require(values_.rows() >= 1, ErrorKind::invalid_input, "factor series must have at least one row");
        require(values_.cols() >= 1, ErrorKind::invalid_input, "factor series must have at least one time point");
        require(detail::all_finite(values_), ErrorKind::invalid_input, "factor series contains non-finite values");
    }

    [[nodiscard]] const Matrix& values() const noexcept { return values_; }
    [[nodiscard]] Eigen::Index r() const noexcept { return values_.rows(); }
    [[nodiscard]] Eigen::Index T() const noexcept { return values_.cols(); }

private:
    Matrix values_;
};

struct LagCovariance {
    Matrix matrix;
    Eigen::Index lag = 0;
};

/// Time average of every row.
[[nodiscard]] inline Vector column_mean(const Matrix& values) {
    require(values.size() > 0, ErrorKind::invalid_input, "column_mean: empty panel");
    return values.rowwise().mean();
}

[[nodiscard]] inline Vector column_mean(const PanelSeries& panel) { return column_mean(panel.values()); }

/**
 * Lag-k sample autocovariance
 *
 *     (1/(T-k)) * sum_{t=1}^{T-k} (y_{t+k} - ybar)(y_t - ybar)^T
 *
 * with the full-sample mean ybar in both factors. Entry (i, j) pairs
 * coordinate i at time t+k with coordinate j at time t.
 */
[[nodiscard]] inline Matrix sample_autocov(const Matrix& values, Eigen::Index k) {
    const Eigen::Index T = values.cols();
    require(k >= 0 && k <= T - 2, ErrorKind::invalid_lag,
            "sample_autocov: lag " + std::to_string(k) + " outside [0, " + std::to_string(T - 2) + "]");
    const Matrix centered = values.colwise() - column_mean(values);
    const Eigen::Index n = T - k;
    Matrix out = centered.rightCols(n) * centered.leftCols(n).transpose();
    out /= static_cast<double>(n);
    return out;
}

[[nodiscard]] inline LagCovariance sample_autocov(const PanelSeries& panel, Eigen::Index k) {
    return {sample_autocov(panel.values(), k), k};
}

/// Returns the row-demeaned series together with the removed mean.
[[nodiscard]] inline std::pair<FactorSeries, Vector> demean(const FactorSeries& series) {
    Vector mean = column_mean(series.values());
    Matrix centered = series.values().colwise() - mean;
    return {FactorSeries(std::move(centered)), std::move(mean)};
}

// ---------------------------------------------------------------------------
// CSV interchange

/// Shortest round-trip decimal representation; identical on every platform.
[[nodiscard]] inline std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view token, double& out) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    if (token.empty()) return false;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc{} && ptr == token.data() + token.size();
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace detail

/**
 * Reads a numeric matrix from CSV. A first line containing any non-numeric
 * field is treated as a header and skipped. Blank lines are ignored. Errors
 * report 1-based line and column numbers.
 */
[[nodiscard]] inline Matrix read_matrix_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split(line, ',');
        std::vector<double> row;
        row.reserve(fields.size());
        bool header = false;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            double v = 0.0;
            if (!detail::parse_double(fields[c], v)) {
                if (first_content) {
                    header = true;
                    break;
                }
                fail(ErrorKind::parse_error, "line " + std::to_string(line_no) + ", column " +
                                                 std::to_string(c + 1) + ": cannot parse '" +
                                                 std::string(detail::trim(fields[c])) + "' as a number");
            }
            row.push_back(v);
        }
        first_content = false;
        if (header) continue;
        if (!rows.empty() && row.size() != rows.front().size()) {
            fail(ErrorKind::parse_error, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(rows.front().size()) + " columns, found " +
                                             std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), ErrorKind::parse_error, "no numeric rows found");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

/// Reads a panel with rows = coordinates. `transpose` handles time-major files.
[[nodiscard]] inline PanelSeries read_panel_csv(const std::string& path, bool transpose = false) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::io_error, "cannot open '" + path + "' for reading");
    Matrix m = read_matrix_csv(in);
    if (transpose) m.transposeInPlace();
    return PanelSeries(std::move(m));
}

inline void write_matrix_csv(std::ostream& out, const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

inline void write_matrix_csv(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::io_error, "cannot open '" + path + "' for writing");
    write_matrix_csv(out, m);
    require(static_cast<bool>(out), ErrorKind::io_error, "write failed for '" + path + "'");
}

}  // namespace arsieve
