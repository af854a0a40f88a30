// arsieve command-line front end: simulate, estimate, apply, coverage.

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "arsieve/arsieve.hpp"

namespace fs = std::filesystem;
using namespace arsieve;

namespace {

/// Error raised with the pipeline stage it came from.
struct StageError {
    std::string stage;
    std::string kind;
    std::string message;
};

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw StageError{name, std::string(to_string(e.kind())), e.what()};
    }
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::io_error, "cannot open '" + path + "' for writing");
    out << text;
    require(static_cast<bool>(out), ErrorKind::io_error, "write failed for '" + path + "'");
}

std::string level_tag(double level) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", level);
    double back = 0.0;
    if (detail::parse_double(buf, back) && back == level) return buf;
    return format_double(level);
}

// Shared model flags for estimate and apply.
struct ModelFlags {
    std::string input;
    bool transpose = false;
    Eigen::Index k0 = 2;
    std::string r = "auto";
    std::optional<Eigen::Index> R;
    std::string criterion = "aic";
    std::optional<Eigen::Index> p;
    std::optional<Eigen::Index> p_max;

    void attach(CLI::App* cmd) {
        cmd->add_option("-i,--input", input, "Panel CSV, rows = coordinates, columns = time")->required();
        cmd->add_flag("--transpose", transpose, "Input is time-major (rows = time)");
        cmd->add_option("--k0", k0, "Autocovariance lags accumulated in L")->capture_default_str()->check(CLI::Range(1, 5));
        cmd->add_option("--r", r, "Number of factors, or 'auto' for the ratio estimator")->capture_default_str();
        cmd->add_option("--R", R, "Ratio-search bound (default floor(N/3))");
        cmd->add_option("--criterion", criterion, "VAR order rule: aic, sc, fixed, rate-rule")
            ->capture_default_str()
            ->check(CLI::IsMember({"aic", "sc", "fixed", "rate-rule"}));
        cmd->add_option("--p", p, "Fixed VAR order (implies --criterion fixed)");
        cmd->add_option("--p-max", p_max, "Largest order considered by aic/sc");
    }

    PipelineOptions options() const {
        PipelineOptions opt;
        opt.factor.k0 = k0;
        if (r != "auto") {
            Eigen::Index v = 0;
            try {
                std::size_t used = 0;
                v = static_cast<Eigen::Index>(std::stol(r, &used));
                if (used != r.size()) throw std::invalid_argument(r);
            } catch (const std::exception&) {
                fail(ErrorKind::invalid_input, "--r expects a positive integer or 'auto', got '" + r + "'");
            }
            require(v >= 1, ErrorKind::invalid_input, "--r must be at least 1");
            opt.factor.r = v;
        }
        opt.factor.R = R;
        if (criterion == "aic") opt.order.criterion = OrderCriterion::aic;
        if (criterion == "sc") opt.order.criterion = OrderCriterion::sc;
        if (criterion == "fixed") opt.order.criterion = OrderCriterion::fixed;
        if (criterion == "rate-rule") opt.order.criterion = OrderCriterion::rate_rule;
        if (p) {
            require(*p >= 1, ErrorKind::invalid_input, "--p must be at least 1");
            opt.order.criterion = OrderCriterion::fixed;
            opt.order.fixed_p = *p;
        }
        return opt;
    }

    PanelSeries read() const {
        return stage("input", [&] { return read_panel_csv(input, transpose); });
    }

    PipelineFit fit(const PanelSeries& panel) const {
        PipelineOptions opt = stage("args", [&] { return options(); });
        opt.order.p_max = p_max.value_or(default_p_max(panel.T()));
        PipelineFit pf = stage("fit", [&] { return fit_pipeline(panel.values(), opt); });
        for (const auto& w : pf.warnings) warn(w);
        return pf;
    }
};

// ---------------------------------------------------------------------------

struct SimulateFlags {
    std::string dgp = "two-factor";
    Eigen::Index N = 50;
    Eigen::Index T = 200;
    double nu = 1.0;
    double ar = 0.5;
    std::uint64_t seed = 0;
    std::string out;
    std::string truth;
};

int cmd_simulate(const SimulateFlags& f) {
    DgpSpec spec = stage("args", [&] {
        DgpSpec s;
        s.kind = parse_dgp_kind(f.dgp);
        s.N = f.N;
        s.T = f.T;
        s.nu = f.nu;
        s.ar_coeff = f.ar;
        s.seed = f.seed;
        check_nu(s.nu);
        return s;
    });
    auto [panel, truth] = stage("simulate", [&] { return simulate(spec); });
    stage("output", [&] {
        if (f.out.empty() || f.out == "-") {
            write_matrix_csv(std::cout, panel.values());
        } else {
            write_matrix_csv(f.out, panel.values());
        }
        std::string truth_path = f.truth;
        if (truth_path.empty() && !f.out.empty() && f.out != "-")
            truth_path = (fs::path(f.out).parent_path() / (fs::path(f.out).stem().string() + ".truth.json")).string();
        if (!truth_path.empty()) write_text(truth_path, truth_report(spec, truth).dump(2) + "\n");
        return 0;
    });
    return 0;
}

// ---------------------------------------------------------------------------

struct EstimateFlags {
    ModelFlags model;
    std::string out;
    Eigen::Index head = 10;
};

int cmd_estimate(const EstimateFlags& f) {
    const PanelSeries panel = f.model.read();
    const PipelineFit pf = f.model.fit(panel);
    stage("output", [&] {
        write_text(f.out, estimate_report(pf, f.head).dump(2) + "\n");
        return 0;
    });
    return 0;
}

// ---------------------------------------------------------------------------

struct ApplyFlags {
    ModelFlags model;
    std::string out_dir;
    std::size_t B = 999;
    std::uint64_t seed = 0;
    std::vector<double> levels{0.95};
    std::string kind;
    Eigen::Index lag = 1;
    std::optional<Eigen::Index> burn_in;
    std::string variant = "factor-only";
    std::string noise = "diagonal";
    std::string mode = "factor-level";
    double nu = 1.0;
    std::optional<unsigned> threads;
    bool no_surface = false;
};

int cmd_apply(const ApplyFlags& f) {
    const PanelSeries panel = f.model.read();
    const Eigen::Index N = panel.N(), T = panel.T();
    stage("args", [&] {
        check_nu(f.nu);
        for (double l : f.levels) require(l > 0.0 && l < 1.0, ErrorKind::invalid_input, "levels must lie in (0, 1)");
        require(f.lag >= 1 && f.lag <= T - 2, ErrorKind::invalid_lag,
                "--lag " + std::to_string(f.lag) + " outside [1, " + std::to_string(T - 2) + "]");
        require(f.B >= 20, ErrorKind::invalid_input, "--B must be at least 20 for percentile intervals");
        if (!f.no_surface)
            require(static_cast<double>(N) * static_cast<double>(N) * static_cast<double>(f.B) <= 2.5e8,
                    ErrorKind::invalid_input,
                    "autocovariance surface needs N*N*B values; reduce --B or pass --no-surface");
        return 0;
    });
    const PipelineFit pf = f.model.fit(panel);

    BootstrapConfig bc;
    stage("args", [&] {
        bc.B = f.B;
        bc.root_seed = f.seed;
        bc.burn_in = f.burn_in;
        bc.levels = f.levels;
        bc.threads = f.threads.value_or(default_threads());
        bc.variant = f.variant == "noise-augmented" ? BootstrapVariant::noise_augmented : BootstrapVariant::factor_only;
        bc.noise_method = f.noise == "hard-threshold" ? NoiseCovMethod::hard_threshold : NoiseCovMethod::diagonal;
        bc.mode = f.mode == "panel" ? StatisticMode::panel
                  : f.mode == "reestimate" ? StatisticMode::reestimate
                                           : StatisticMode::factor_level;
        bc.statistics = {StatisticId::mean(f.nu), StatisticId::mean_vector()};
        for (Eigen::Index i = 1; i <= pf.fit.r; ++i) bc.statistics.push_back(StatisticId::eigen(i, f.lag, true));
        if (!f.no_surface) bc.statistics.push_back(StatisticId::autocov_surface(f.lag));
        return 0;
    });
    const std::optional<IntervalKind> kind_override =
        f.kind.empty() ? std::nullopt : std::optional(stage("args", [&] { return parse_interval_kind(f.kind); }));
    const IntervalKind mean_kind = kind_override.value_or(IntervalKind::reverse_percentile);
    const IntervalKind eigen_kind = kind_override.value_or(IntervalKind::unreversed_percentile);

    const auto reps = stage("bootstrap", [&] { return run_bootstrap(panel.values(), pf.fit, pf.model, bc); });

    stage("output", [&] {
        fs::create_directories(f.out_dir);
        const fs::path dir(f.out_dir);
        Json doc;
        doc["input"] = fs::path(f.model.input).filename().string();
        doc["N"] = N;
        doc["T"] = T;
        doc["B"] = f.B;
        doc["seed"] = f.seed;
        doc["lag"] = f.lag;
        doc["variant"] = f.variant;
        doc["mode"] = f.mode;
        doc["model"] = estimate_report(pf);
        Json stats = Json::array();

        for (std::size_t s = 0; s < bc.statistics.size(); ++s) {
            const StatisticId& stat = bc.statistics[s];
            const std::vector<double> est = sample_statistic(stat, panel.values(), pf.fit);
            const bool mean_type = stat.kind == StatisticKind::mean_statistic || stat.kind == StatisticKind::mean_vector;
            const IntervalKind kind = mean_type ? mean_kind : eigen_kind;

            if (stat.kind == StatisticKind::mean_statistic || stat.kind == StatisticKind::spiked_eigenvalue) {
                Json j;
                j["statistic"] = stat.name();
                j["estimate"] = est[0];
                Json ivs = Json::array();
                const auto samples = replicate_column(reps, s);
                for (double level : f.levels) {
                    const auto iv = make_interval(kind, est[0], samples, level);
                    Json e;
                    e["level"] = level;
                    e["kind"] = to_string(kind);
                    e["lower"] = iv.lower;
                    e["upper"] = iv.upper;
                    ivs.push_back(e);
                }
                j["intervals"] = ivs;
                stats.push_back(j);
                continue;
            }

            const Eigen::Index n = static_cast<Eigen::Index>(est.size());
            std::vector<Vector> lower(f.levels.size(), Vector(n)), upper(f.levels.size(), Vector(n));
            std::vector<double> samples(reps.size());
            for (Eigen::Index c = 0; c < n; ++c) {
                for (std::size_t b = 0; b < reps.size(); ++b) samples[b] = reps[b].statistics[s][static_cast<std::size_t>(c)];
                for (std::size_t li = 0; li < f.levels.size(); ++li) {
                    const auto iv = make_interval(kind, est[static_cast<std::size_t>(c)], samples, f.levels[li]);
                    lower[li](c) = iv.lower;
                    upper[li](c) = iv.upper;
                }
            }
            if (stat.kind == StatisticKind::mean_vector) {
                for (std::size_t li = 0; li < f.levels.size(); ++li) {
                    std::ostringstream os;
                    os << "index,estimate,lower,upper\n";
                    for (Eigen::Index c = 0; c < n; ++c)
                        os << (c + 1) << ',' << format_double(est[static_cast<std::size_t>(c)]) << ','
                           << format_double(lower[li](c)) << ',' << format_double(upper[li](c)) << '\n';
                    write_text((dir / ("mean_interval_" + level_tag(f.levels[li]) + ".csv")).string(), os.str());
                }
            } else {
                auto grid = [&](const Vector& v) { return Eigen::Map<const Matrix>(v.data(), N, N); };
                write_matrix_csv((dir / "surface_estimate.csv").string(),
                                 Eigen::Map<const Matrix>(est.data(), N, N));
                for (std::size_t li = 0; li < f.levels.size(); ++li) {
                    const std::string tag = level_tag(f.levels[li]);
                    write_matrix_csv((dir / ("surface_lower_" + tag + ".csv")).string(), grid(lower[li]));
                    write_matrix_csv((dir / ("surface_upper_" + tag + ".csv")).string(), grid(upper[li]));
                }
            }
        }
        doc["statistics"] = stats;
        doc["mean_vector_kind"] = to_string(mean_kind);
        if (!f.no_surface) doc["surface_kind"] = to_string(eigen_kind);
        Json warnings = Json::array();
        for (const auto& w : pf.warnings) warnings.push_back(w);
        doc["warnings"] = warnings;
        write_text((dir / "intervals.json").string(), doc.dump(2) + "\n");
        return 0;
    });
    return 0;
}

// ---------------------------------------------------------------------------

struct CoverageFlags {
    std::string config;
    std::optional<unsigned> threads;
    std::string output;
    std::string format;
    bool quiet = false;
};

int cmd_coverage(const CoverageFlags& f) {
    ExperimentConfig cfg = stage("config", [&] { return read_experiment_config(f.config); });
    if (f.threads) cfg.grid.threads = *f.threads;
    else if (cfg.grid.threads == 1 && std::getenv("ARSIEVE_THREADS")) cfg.grid.threads = default_threads();
    if (!f.output.empty()) cfg.output = f.output;
    if (!f.format.empty()) cfg.format = stage("args", [&] { return parse_table_format(f.format); });
    stage("config", [&] {
        validate_grid(cfg.grid);
        return 0;
    });

    std::size_t last_pct = 0;
    ProgressFn progress;
    if (!f.quiet) {
        progress = [&](std::size_t done, std::size_t total) {
            const std::size_t pct = done * 100 / total;
            if (pct >= last_pct + 10 || done == total) {
                last_pct = pct;
                std::cerr << "progress: " << done << "/" << total << " replications\n";
            }
        };
    }
    const CoverageReport report = stage("coverage", [&] { return run_coverage_experiment(cfg.grid, progress); });
    for (const auto& c : report.cells) {
        if (!f.quiet)
            std::cerr << "cell T=" << c.T << " N=" << c.N << " nu=" << format_double(c.nu) << ": " << c.successes
                      << " ok, " << c.failures << " failed, r-hat correct " << c.rank_hits << "/" << c.successes
                      << ", mean p " << format_double(c.mean_order) << '\n';
        for (const auto& m : c.failure_messages) warn(m);
    }
    stage("output", [&] {
        write_text(cfg.output, emit_table(report.rows, cfg.format));
        return 0;
    });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sieve bootstrap inference for large time-series panels driven by a few factors"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "arsieve 0.1.0");

    SimulateFlags sim;
    auto* c_sim = app.add_subcommand("simulate", "Simulate a panel from a built-in data-generating process");
    c_sim->add_option("--dgp", sim.dgp, "two-factor or three-factor")->capture_default_str();
    c_sim->add_option("--N", sim.N, "Cross-section dimension")->capture_default_str();
    c_sim->add_option("--T", sim.T, "Series length")->capture_default_str();
    c_sim->add_option("--nu", sim.nu, "Factor strength in (0, 1]")->capture_default_str();
    c_sim->add_option("--ar", sim.ar, "AR coefficient of the two-factor DGP")->capture_default_str();
    c_sim->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
    c_sim->add_option("-o,--out", sim.out, "Panel CSV path (standard output when omitted)");
    c_sim->add_option("--truth", sim.truth, "Truth JSON path (default <out>.truth.json)");

    EstimateFlags est;
    auto* c_est = app.add_subcommand("estimate", "Fit the factor model and VAR sieve, print a JSON report");
    est.model.attach(c_est);
    c_est->add_option("-o,--out", est.out, "Report path (standard output when omitted)");
    c_est->add_option("--head", est.head, "Number of leading eigenvalues reported")->capture_default_str();

    ApplyFlags ap;
    auto* c_ap = app.add_subcommand("apply", "Bootstrap intervals for the mean vector and autocovariance surface");
    ap.model.attach(c_ap);
    c_ap->add_option("-o,--out-dir", ap.out_dir, "Output directory")->required();
    c_ap->add_option("--B", ap.B, "Bootstrap replicates")->capture_default_str();
    c_ap->add_option("--seed", ap.seed, "Root seed")->capture_default_str();
    c_ap->add_option("--levels", ap.levels, "Confidence levels")->capture_default_str()->delimiter(',');
    c_ap->add_option("--kind", ap.kind, "Interval kind for every output: reverse, normal, unreversed");
    c_ap->add_option("--lag", ap.lag, "Autocovariance lag k")->capture_default_str();
    c_ap->add_option("--burn-in", ap.burn_in, "Bootstrap burn-in (default 50 + 10 p)");
    c_ap->add_option("--variant", ap.variant, "factor-only or noise-augmented")
        ->capture_default_str()
        ->check(CLI::IsMember({"factor-only", "noise-augmented"}));
    c_ap->add_option("--noise", ap.noise, "Noise covariance estimator: diagonal or hard-threshold")
        ->capture_default_str()
        ->check(CLI::IsMember({"diagonal", "hard-threshold"}));
    c_ap->add_option("--mode", ap.mode, "Replicate statistics: factor-level, panel, reestimate")
        ->capture_default_str()
        ->check(CLI::IsMember({"factor-level", "panel", "reestimate"}));
    c_ap->add_option("--nu", ap.nu, "Strength exponent used by the scalar mean statistic")->capture_default_str();
    c_ap->add_option("--threads", ap.threads, "Worker threads (default ARSIEVE_THREADS or all cores)");
    c_ap->add_flag("--no-surface", ap.no_surface, "Skip the autocovariance surface");

    CoverageFlags cov;
    auto* c_cov = app.add_subcommand("coverage", "Run a Monte Carlo coverage experiment from a config file");
    c_cov->add_option("config", cov.config, "Experiment config file")->required();
    c_cov->add_option("--threads", cov.threads, "Worker threads (overrides the config)");
    c_cov->add_option("-o,--output", cov.output, "Output path (overrides the config)");
    c_cov->add_option("--format", cov.format, "csv, json or markdown (overrides the config)");
    c_cov->add_flag("-q,--quiet", cov.quiet, "No progress output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error:args: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*c_sim) return cmd_simulate(sim);
        if (*c_est) return cmd_estimate(est);
        if (*c_ap) return cmd_apply(ap);
        if (*c_cov) return cmd_coverage(cov);
    } catch (const StageError& e) {
        std::cerr << "error:" << e.stage << ": " << e.kind << ": " << e.message << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error:internal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
