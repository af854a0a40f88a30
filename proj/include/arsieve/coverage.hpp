#pragma once

/** @file
 * Monte Carlo coverage harness, table output and the experiment config file.
 *
 * Replication m of cell c uses seed_m = stable_mix(root_seed, c, m); the panel
 * is simulated from stable_mix(seed_m, 0) and the bootstrap root seed is
 * stable_mix(seed_m, 1). Cells are numbered nu-major over the (T, N) list.
 *
 * Config file: one `key = value` per line, `#` starts a comment, lists are
 * comma separated.
 *
 *   cells      = 200x50, 500x100     (T x N pairs)
 *   nu         = 1.0, 0.2
 *   M          = 300
 *   B          = 399
 *   levels     = 0.9, 0.95
 *   kinds      = reverse, normal, unreversed
 *   statistics = mean, eig1, eig2
 *   seed       = 42
 *   dgp        = two-factor | three-factor
 *   r          = 2 | auto
 *   k0         = 2
 *   order      = aic | sc | fixed | rate-rule
 *   p          = 1        (used with order = fixed)
 *   p_max      = 8
 *   burn_in    = 60       (default 50 + 10 p)
 *   variant    = factor-only | noise-augmented
 *   mode       = factor-level | panel | reestimate
 *   threads    = 4
 *   output     = results.csv   (empty: standard output)
 *   format     = csv | json | markdown
 */

#include <Eigen/Dense>
#include <Eigen/QR>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "arsieve/bootstrap.hpp"
#include "arsieve/error.hpp"
#include "arsieve/factor.hpp"
#include "arsieve/inference.hpp"
#include "arsieve/panel.hpp"
#include "arsieve/parallel.hpp"
#include "arsieve/rng.hpp"
#include "arsieve/sim.hpp"
#include "arsieve/var_sieve.hpp"

namespace arsieve {

struct GridCell {
    Eigen::Index T = 200;
    Eigen::Index N = 50;
};

struct ExperimentGrid {
    std::vector<GridCell> cells{{200, 50}};
    std::vector<double> nus{1.0};
    std::vector<double> levels{0.95};
    std::size_t M = 100;
    std::size_t B = 199;
    std::vector<IntervalKind> kinds{IntervalKind::reverse_percentile};
    std::vector<StatisticId> statistics{StatisticId::mean()};
    std::uint64_t root_seed = 0;
    DgpKind dgp = DgpKind::two_factor_ar1;
    std::optional<Eigen::Index> r = 2;  ///< nullopt: ratio estimator
    Eigen::Index k0 = 2;
    OrderSelection order;
    std::optional<Eigen::Index> p_max;  ///< default_p_max(T) when empty
    std::optional<Eigen::Index> burn_in;
    BootstrapVariant variant = BootstrapVariant::factor_only;
    StatisticMode mode = StatisticMode::factor_level;
    unsigned threads = 1;
};

/// Per-cell bookkeeping besides the coverage rows.
struct CellSummary {
    Eigen::Index T = 0;
    Eigen::Index N = 0;
    double nu = 1.0;
    std::size_t successes = 0;
    std::size_t failures = 0;
    std::size_t rank_hits = 0;  ///< replications with r-hat equal to the true number of factors
    double mean_order = 0.0;    ///< average chosen VAR order
    std::vector<std::string> failure_messages;  ///< first few, in replication order
};

struct CoverageReport {
    std::vector<CoverageRow> rows;  ///< cell, then statistic, then kind, then level
    std::vector<CellSummary> cells;
};

inline void validate_grid(const ExperimentGrid& g) {
    require(!g.cells.empty(), ErrorKind::invalid_input, "grid: no (T, N) cells");
    require(!g.nus.empty(), ErrorKind::invalid_input, "grid: no nu values");
    require(!g.levels.empty(), ErrorKind::invalid_input, "grid: no levels");
    require(!g.kinds.empty(), ErrorKind::invalid_input, "grid: no interval kinds");
    require(!g.statistics.empty(), ErrorKind::invalid_input, "grid: no statistics");
    require(g.M >= 1, ErrorKind::invalid_input, "grid: M must be at least 1");
    require(g.B >= 20, ErrorKind::invalid_input, "grid: B must be at least 20");
    for (double nu : g.nus) check_nu(nu);
    for (double level : g.levels) check_alpha(1.0 - level);
    for (const auto& s : g.statistics)
        require(s.kind == StatisticKind::mean_statistic || s.kind == StatisticKind::spiked_eigenvalue,
                ErrorKind::invalid_input, "grid: statistic '" + s.name() + "' has no scalar truth");
}

namespace detail {

struct ReplicationOutcome {
    bool ok = false;
    std::string error;
    Eigen::Index r_hat = 0;
    Eigen::Index p = 0;
    std::vector<IntervalEstimate> intervals;  ///< statistic-major, then kind, then level
    std::vector<double> truths;               ///< one per statistic
};

inline ReplicationOutcome run_replication(const ExperimentGrid& g, const GridCell& cell, double nu, std::uint64_t seed) {
    ReplicationOutcome out;
    try {
        DgpSpec spec;
        spec.kind = g.dgp;
        spec.N = cell.N;
        spec.T = cell.T;
        spec.nu = nu;
        spec.seed = stable_mix(seed, 0);
        auto [panel, truth] = simulate(spec);

        PipelineOptions opt;
        opt.factor.k0 = g.k0;
        opt.factor.r = g.r;
        opt.order = g.order;
        opt.order.p_max = g.p_max.value_or(default_p_max(cell.T));
        const PipelineFit pf = fit_pipeline(panel.values(), opt);
        out.r_hat = pf.fit.r_estimated ? pf.fit.r
                                       : estimate_num_factors(pf.fit.spectrum.eigenvalues, default_ratio_bound(cell.N)).r;
        out.p = pf.model.p;

        BootstrapConfig bc;
        bc.B = g.B;
        bc.root_seed = stable_mix(seed, 1);
        bc.burn_in = g.burn_in;
        bc.variant = g.variant;
        bc.mode = g.mode;
        bc.levels = g.levels;
        bc.statistics = g.statistics;
        for (auto& s : bc.statistics) s.nu = nu;
        bc.threads = 1;
        const auto reps = run_bootstrap(panel.values(), pf.fit, pf.model, bc);

        for (std::size_t s = 0; s < bc.statistics.size(); ++s) {
            const double theta_hat = sample_statistic(bc.statistics[s], panel.values(), pf.fit).front();
            out.truths.push_back(truth.statistic(bc.statistics[s], cell.T));
            const auto samples = replicate_column(reps, s);
            for (IntervalKind kind : g.kinds)
                for (double level : g.levels) out.intervals.push_back(make_interval(kind, theta_hat, samples, level));
        }
        out.ok = true;
    } catch (const Error& e) {
        out.ok = false;
        out.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    return out;
}

}  // namespace detail

/// Progress callback: (finished replications, total replications).
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

/**
 * Runs every replication of every cell. Replications that raise a library
 * error are counted in `failures` and excluded from the coverage
 * denominators. Output does not depend on grid.threads.
 */
[[nodiscard]] inline CoverageReport run_coverage_experiment(const ExperimentGrid& g, const ProgressFn& progress = {}) {
    validate_grid(g);
    struct Task {
        std::size_t cell_index;
        GridCell cell;
        double nu;
    };
    std::vector<Task> cells;
    for (double nu : g.nus)
        for (const auto& c : g.cells) cells.push_back({cells.size(), c, nu});

    const std::size_t total = cells.size() * g.M;
    std::vector<detail::ReplicationOutcome> outcomes(total);
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    parallel_for(total, g.threads, [&](std::size_t i) {
        const Task& t = cells[i / g.M];
        const std::size_t m = i % g.M;
        outcomes[i] = detail::run_replication(g, t.cell, t.nu, stable_mix(g.root_seed, t.cell_index, m));
        const std::size_t finished = ++done;
        if (progress) {
            std::lock_guard lock(progress_mutex);
            progress(finished, total);
        }
    });

    CoverageReport report;
    const std::size_t per_stat = g.kinds.size() * g.levels.size();
    for (const Task& t : cells) {
        CellSummary summary;
        summary.T = t.cell.T;
        summary.N = t.cell.N;
        summary.nu = t.nu;
        const Eigen::Index true_r = g.dgp == DgpKind::two_factor_ar1 ? 2 : 3;
        std::vector<const detail::ReplicationOutcome*> ok;
        for (std::size_t m = 0; m < g.M; ++m) {
            const auto& o = outcomes[t.cell_index * g.M + m];
            if (!o.ok) {
                ++summary.failures;
                if (summary.failure_messages.size() < 5)
                    summary.failure_messages.push_back("replication " + std::to_string(m) + ": " + o.error);
                continue;
            }
            ok.push_back(&o);
            if (o.r_hat == true_r) ++summary.rank_hits;
            summary.mean_order += static_cast<double>(o.p);
        }
        summary.successes = ok.size();
        if (!ok.empty()) summary.mean_order /= static_cast<double>(ok.size());

        for (std::size_t s = 0; s < g.statistics.size(); ++s) {
            StatisticId stat = g.statistics[s];
            stat.nu = t.nu;
            for (std::size_t ki = 0; ki < g.kinds.size(); ++ki) {
                for (std::size_t li = 0; li < g.levels.size(); ++li) {
                    const std::size_t slot = s * per_stat + ki * g.levels.size() + li;
                    CoverageRow row;
                    if (!ok.empty()) {
                        // Truth depends only on the cell, so any successful replication supplies it.
                        std::vector<IntervalEstimate> ivs;
                        ivs.reserve(ok.size());
                        for (const auto* o : ok) ivs.push_back(o->intervals[slot]);
                        row = aggregate_coverage(ivs, ok.front()->truths[s]);
                    } else {
                        row.coverage = row.width = row.score = std::numeric_limits<double>::quiet_NaN();
                    }
                    row.T = t.cell.T;
                    row.N = t.cell.N;
                    row.level = g.levels[li];
                    row.kind = g.kinds[ki];
                    row.statistic = stat.name();
                    row.nu = t.nu;
                    row.M = ok.size();
                    row.failures = summary.failures;
                    report.rows.push_back(row);
                }
            }
        }
        report.cells.push_back(std::move(summary));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Tables

enum class TableFormat { csv, json, markdown };

[[nodiscard]] inline TableFormat parse_table_format(const std::string& s) {
    if (s == "csv") return TableFormat::csv;
    if (s == "json") return TableFormat::json;
    if (s == "markdown" || s == "md") return TableFormat::markdown;
    fail(ErrorKind::invalid_input, "unknown table format '" + s + "' (expected csv, json or markdown)");
}

inline constexpr const char* kCoverageCsvHeader = "T,N,level,coverage,width,score,kind,statistic,nu,M,failures";

namespace detail {

inline std::string fixed3(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    return buf;
}

inline void emit_csv(std::ostream& out, const std::vector<CoverageRow>& rows) {
    out << kCoverageCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.T << ',' << r.N << ',' << format_double(r.level) << ',' << format_double(r.coverage) << ','
            << format_double(r.width) << ',' << format_double(r.score) << ',' << to_string(r.kind) << ','
            << r.statistic << ',' << format_double(r.nu) << ',' << r.M << ',' << r.failures << '\n';
    }
}

inline void emit_json(std::ostream& out, const std::vector<CoverageRow>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["T"] = r.T;
        j["N"] = r.N;
        j["level"] = r.level;
        j["coverage"] = r.coverage;
        j["width"] = r.width;
        j["score"] = r.score;
        j["kind"] = to_string(r.kind);
        j["statistic"] = r.statistic;
        j["nu"] = r.nu;
        j["M"] = r.M;
        j["failures"] = r.failures;
        arr.push_back(std::move(j));
    }
    out << arr.dump(2) << '\n';
}

/// One block per (statistic, kind, nu); rows are (T, N) cells, columns are
/// coverage / width / score for each level.
inline void emit_markdown(std::ostream& out, const std::vector<CoverageRow>& rows) {
    struct BlockKey {
        std::string statistic;
        IntervalKind kind;
        double nu;
        bool operator==(const BlockKey&) const = default;
    };
    std::vector<BlockKey> blocks;
    std::vector<double> levels;
    for (const auto& r : rows) {
        const BlockKey key{r.statistic, r.kind, r.nu};
        if (std::find(blocks.begin(), blocks.end(), key) == blocks.end()) blocks.push_back(key);
        if (std::find(levels.begin(), levels.end(), r.level) == levels.end()) levels.push_back(r.level);
    }
    bool first = true;
    for (const auto& b : blocks) {
        if (!first) out << '\n';
        first = false;
        out << "### " << b.statistic << ", " << to_string(b.kind) << ", nu = " << format_double(b.nu) << "\n\n";
        out << "| T | N |";
        for (double l : levels) out << " cov " << format_double(l) << " | width " << format_double(l) << " | score "
                                    << format_double(l) << " |";
        out << "\n|---|---|";
        for (std::size_t i = 0; i < levels.size(); ++i) out << "---|---|---|";
        out << '\n';
        std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
        for (const auto& r : rows)
            if (BlockKey{r.statistic, r.kind, r.nu} == b &&
                std::find(cells.begin(), cells.end(), std::pair{r.T, r.N}) == cells.end())
                cells.emplace_back(r.T, r.N);
        for (const auto& [T, N] : cells) {
            out << "| " << T << " | " << N << " |";
            for (double l : levels) {
                const CoverageRow* hit = nullptr;
                for (const auto& r : rows)
                    if (BlockKey{r.statistic, r.kind, r.nu} == b && r.T == T && r.N == N && r.level == l) hit = &r;
                if (hit)
                    out << ' ' << fixed3(hit->coverage) << " | " << fixed3(hit->width) << " | " << fixed3(hit->score) << " |";
                else
                    out << " - | - | - |";
            }
            out << '\n';
        }
    }
}

}  // namespace detail

inline void emit_table(std::ostream& out, const std::vector<CoverageRow>& rows, TableFormat format) {
    require(!rows.empty(), ErrorKind::invalid_input, "emit_table: no rows");
    switch (format) {
    case TableFormat::csv: detail::emit_csv(out, rows); break;
    case TableFormat::json: detail::emit_json(out, rows); break;
    case TableFormat::markdown: detail::emit_markdown(out, rows); break;
    }
}

[[nodiscard]] inline std::string emit_table(const std::vector<CoverageRow>& rows, TableFormat format) {
    std::ostringstream os;
    emit_table(os, rows, format);
    return os.str();
}

/// Reads the CSV produced by emit_table.
[[nodiscard]] inline std::vector<CoverageRow> parse_coverage_csv(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::parse_error, "coverage csv: empty input");
    require(detail::trim(line) == kCoverageCsvHeader, ErrorKind::parse_error, "coverage csv: unexpected header");
    std::vector<CoverageRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split(line, ',');
        auto where = [&](std::size_t c) { return "line " + std::to_string(line_no) + ", column " + std::to_string(c + 1); };
        require(f.size() == 11, ErrorKind::parse_error, "line " + std::to_string(line_no) + ": expected 11 columns");
        auto num = [&](std::size_t c) {
            double v = 0.0;
            if (!detail::parse_double(f[c], v)) {
                const std::string_view t = detail::trim(f[c]);
                if (t == "nan" || t == "-nan") return std::numeric_limits<double>::quiet_NaN();
                fail(ErrorKind::parse_error, where(c) + ": not a number");
            }
            return v;
        };
        CoverageRow r;
        r.T = static_cast<Eigen::Index>(num(0));
        r.N = static_cast<Eigen::Index>(num(1));
        r.level = num(2);
        r.coverage = num(3);
        r.width = num(4);
        r.score = num(5);
        r.kind = parse_interval_kind(std::string(detail::trim(f[6])));
        r.statistic = std::string(detail::trim(f[7]));
        r.nu = num(8);
        r.M = static_cast<std::size_t>(num(9));
        r.failures = static_cast<std::size_t>(num(10));
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Config file

struct ExperimentConfig {
    ExperimentGrid grid;
    std::string output;  ///< empty: standard output
    TableFormat format = TableFormat::csv;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    for (auto part : split(value, ',')) {
        const auto t = trim(part);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

}  // namespace detail

/**
 * Parses the key-value experiment config. Unknown keys, repeated keys and
 * invalid values raise config-error naming the key.
 */
[[nodiscard]] inline ExperimentConfig parse_experiment_config(std::istream& in) {
    static const std::set<std::string> known{"cells", "nu", "M", "B", "levels", "kinds", "statistics", "seed",
                                             "dgp", "r", "k0", "order", "p", "p_max", "burn_in", "variant",
                                             "mode", "threads", "output", "format"};
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        require(eq != std::string_view::npos, ErrorKind::config_error,
                "line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(detail::trim(t.substr(0, eq)));
        const std::string value(detail::trim(t.substr(eq + 1)));
        require(known.count(key) > 0, ErrorKind::config_error, "unknown key '" + key + "'");
        require(kv.count(key) == 0, ErrorKind::config_error, "key '" + key + "' given twice");
        kv[key] = value;
    }

    ExperimentConfig cfg;
    ExperimentGrid& g = cfg.grid;
    auto bad = [](const std::string& key, const std::string& value, const std::string& why) {
        fail(ErrorKind::config_error, "key '" + key + "': invalid value '" + value + "' (" + why + ")");
    };
    auto to_double = [&](const std::string& key, const std::string& v) {
        double x = 0.0;
        if (!detail::parse_double(v, x)) bad(key, v, "not a number");
        return x;
    };
    auto to_int = [&](const std::string& key, const std::string& v, long long lo) {
        const double x = to_double(key, v);
        if (x != std::floor(x) || x < static_cast<double>(lo) || x > 9.0e15) bad(key, v, "expected an integer >= " + std::to_string(lo));
        return static_cast<long long>(x);
    };
    auto doubles = [&](const std::string& key) {
        std::vector<double> out;
        for (const auto& item : detail::split_list(kv[key])) out.push_back(to_double(key, item));
        if (out.empty()) bad(key, kv[key], "empty list");
        return out;
    };

    if (kv.count("cells")) {
        g.cells.clear();
        for (const auto& item : detail::split_list(kv["cells"])) {
            const auto x = item.find('x');
            if (x == std::string::npos) bad("cells", item, "expected TxN");
            g.cells.push_back({static_cast<Eigen::Index>(to_int("cells", item.substr(0, x), 2)),
                               static_cast<Eigen::Index>(to_int("cells", item.substr(x + 1), 1))});
        }
        if (g.cells.empty()) bad("cells", kv["cells"], "empty list");
    }
    if (kv.count("nu")) {
        g.nus = doubles("nu");
        for (double nu : g.nus)
            if (!(nu > 0.0 && nu <= 1.0)) bad("nu", kv["nu"], "nu must lie in (0, 1]");
    }
    if (kv.count("M")) g.M = static_cast<std::size_t>(to_int("M", kv["M"], 1));
    if (kv.count("B")) g.B = static_cast<std::size_t>(to_int("B", kv["B"], 20));
    if (kv.count("levels")) {
        g.levels = doubles("levels");
        for (double l : g.levels)
            if (!(l > 0.0 && l < 1.0)) bad("levels", kv["levels"], "levels must lie in (0, 1)");
    }
    if (kv.count("kinds")) {
        g.kinds.clear();
        for (const auto& item : detail::split_list(kv["kinds"])) {
            try {
                g.kinds.push_back(parse_interval_kind(item));
            } catch (const Error&) {
                bad("kinds", item, "expected reverse, normal or unreversed");
            }
        }
        if (g.kinds.empty()) bad("kinds", kv["kinds"], "empty list");
    }
    if (kv.count("statistics")) {
        g.statistics.clear();
        for (const auto& item : detail::split_list(kv["statistics"])) {
            StatisticId s;
            try {
                s = StatisticId::parse(item);
            } catch (const Error&) {
                bad("statistics", item, "expected mean or eig<i>[_lag<k>][_raw]");
            }
            if (s.kind != StatisticKind::mean_statistic && s.kind != StatisticKind::spiked_eigenvalue)
                bad("statistics", item, "only scalar statistics have a simulation truth");
            g.statistics.push_back(s);
        }
        if (g.statistics.empty()) bad("statistics", kv["statistics"], "empty list");
    }
    if (kv.count("seed")) g.root_seed = static_cast<std::uint64_t>(to_int("seed", kv["seed"], 0));
    if (kv.count("dgp")) {
        try {
            g.dgp = parse_dgp_kind(kv["dgp"]);
        } catch (const Error&) {
            bad("dgp", kv["dgp"], "expected two-factor or three-factor");
        }
    }
    if (kv.count("r")) {
        if (kv["r"] == "auto")
            g.r.reset();
        else
            g.r = static_cast<Eigen::Index>(to_int("r", kv["r"], 1));
    }
    if (kv.count("k0")) g.k0 = static_cast<Eigen::Index>(to_int("k0", kv["k0"], 1));
    if (kv.count("order")) {
        const std::string& v = kv["order"];
        if (v == "aic") g.order.criterion = OrderCriterion::aic;
        else if (v == "sc" || v == "bic") g.order.criterion = OrderCriterion::sc;
        else if (v == "fixed") g.order.criterion = OrderCriterion::fixed;
        else if (v == "rate-rule" || v == "rate_rule") g.order.criterion = OrderCriterion::rate_rule;
        else bad("order", v, "expected aic, sc, fixed or rate-rule");
    }
    if (kv.count("p")) g.order.fixed_p = static_cast<Eigen::Index>(to_int("p", kv["p"], 1));
    if (kv.count("p_max")) g.p_max = static_cast<Eigen::Index>(to_int("p_max", kv["p_max"], 1));
    if (kv.count("burn_in")) g.burn_in = static_cast<Eigen::Index>(to_int("burn_in", kv["burn_in"], 0));
    if (kv.count("variant")) {
        const std::string& v = kv["variant"];
        if (v == "factor-only" || v == "factor_only") g.variant = BootstrapVariant::factor_only;
        else if (v == "noise-augmented" || v == "noise_augmented") g.variant = BootstrapVariant::noise_augmented;
        else bad("variant", v, "expected factor-only or noise-augmented");
    }
    if (kv.count("mode")) {
        const std::string& v = kv["mode"];
        if (v == "factor-level" || v == "factor_level") g.mode = StatisticMode::factor_level;
        else if (v == "panel") g.mode = StatisticMode::panel;
        else if (v == "reestimate") g.mode = StatisticMode::reestimate;
        else bad("mode", v, "expected factor-level, panel or reestimate");
    }
    if (kv.count("threads")) g.threads = static_cast<unsigned>(to_int("threads", kv["threads"], 1));
    if (kv.count("output")) cfg.output = kv["output"];
    if (kv.count("format")) {
        try {
            cfg.format = parse_table_format(kv["format"]);
        } catch (const Error&) {
            bad("format", kv["format"], "expected csv, json or markdown");
        }
    }
    return cfg;
}

[[nodiscard]] inline ExperimentConfig read_experiment_config(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::io_error, "cannot open config '" + path + "'");
    return parse_experiment_config(in);
}

// ---------------------------------------------------------------------------
// Consistency diagnostics

/**
 * Spectral norm of U1 M1 U1^T - U2 M2 U2^T for tall U1, U2, computed through
 * a thin QR of [U1 U2] so the N x N difference is never formed.
 */
[[nodiscard]] inline double low_rank_spectral_distance(const Matrix& U1, const Matrix& M1, const Matrix& U2,
                                                       const Matrix& M2) {
    require(U1.rows() == U2.rows(), ErrorKind::invalid_input, "low_rank_spectral_distance: row mismatch");
    const Eigen::Index a = U1.cols(), b = U2.cols();
    Matrix U(U1.rows(), a + b);
    U << U1, U2;
    Eigen::HouseholderQR<Matrix> qr(U);
    const Eigen::Index k = std::min(U.rows(), a + b);
    const Matrix R = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
    Matrix D = Matrix::Zero(a + b, a + b);
    D.topLeftCorner(a, a) = M1;
    D.bottomRightCorner(b, b) = -M2;
    const Matrix core = R * D * R.transpose();
    Eigen::JacobiSVD<Matrix> svd(core);
    return svd.singularValues()(0);
}

/// Average over B bootstrap replicates of the lag-k factor autocovariance of f*.
[[nodiscard]] inline Matrix bootstrap_mean_factor_autocov(const VarSieveModel& model, Eigen::Index T, std::size_t B,
                                                          std::uint64_t root_seed, Eigen::Index k,
                                                          std::optional<Eigen::Index> burn_in = std::nullopt) {
    const Matrix centered = center_residuals(model.residuals);
    const Eigen::Index burn = burn_in.value_or(default_burn_in(model));
    Matrix acc = Matrix::Zero(model.r(), model.r());
    for (std::size_t b = 0; b < B; ++b)
        acc += sample_autocov(bootstrap_factor_path(model, centered, T, burn, stable_mix(root_seed, b)).values(), k);
    return acc / static_cast<double>(B);
}

/**
 * Distance between the bootstrap-conditional lag-k autocovariance of the
 * common component, Q-hat E*[G_f*(k)] Q-hat^T, and the population
 * Q C(k) Q^T, divided by N. Invariant to the rotation of the factors.
 */
[[nodiscard]] inline double bootstrap_autocov_distance(const PanelSeries& panel, const SimulationTruth& truth,
                                                       std::size_t B, std::uint64_t seed, Eigen::Index k = 1,
                                                       const PipelineOptions& options = {}) {
    const PipelineFit pf = fit_pipeline(panel.values(), options);
    const Matrix gbar = bootstrap_mean_factor_autocov(pf.model, panel.T(), B, seed, k);
    const double d = low_rank_spectral_distance(pf.fit.loadings.Q, gbar, truth.loadings, truth.factor_autocov(k));
    return d / static_cast<double>(panel.N());
}

/// |mean_b delta*_1 - delta_1| / delta_1 for the unstandardised lag-k top eigenvalue.
[[nodiscard]] inline double bootstrap_eigen_relative_error(const PanelSeries& panel, const SimulationTruth& truth,
                                                           std::size_t B, std::uint64_t seed, Eigen::Index k = 1,
                                                           const PipelineOptions& options = {}) {
    const PipelineFit pf = fit_pipeline(panel.values(), options);
    BootstrapConfig bc;
    bc.B = B;
    bc.root_seed = seed;
    bc.statistics = {StatisticId::eigen(1, k, false)};
    const auto reps = run_bootstrap(panel.values(), pf.fit, pf.model, bc);
    double mean = 0.0;
    for (const auto& r : reps) mean += r.statistics[0][0];
    mean /= static_cast<double>(B);
    const double delta = truth.spiked_eigenvalue(k, 1, false, panel.T());
    return std::abs(mean - delta) / delta;
}

}  // namespace arsieve
