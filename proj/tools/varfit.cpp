// Command-line driver: estimate variance from CSV data, run the simulation
// study, compute exact/asymptotic analytics, dump estimator matrices.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "varfit/varfit.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitPrecondition = 3;

struct EstimateArgs {
    std::string input;
    std::string response;
    std::string covariates;  // comma-separated; empty = all non-response columns
    std::string method = "tw";
    std::string bandwidth = "auto";
    std::optional<double> alpha;
    std::string gamma4 = "3";
    bool rescale = false;
    bool as_json = false;
};

std::vector<std::string> split_names(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : csv) {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

varfit::VarianceEstimate estimate_pairwise(const varfit::DatasetFile& ds,
                                           const std::vector<std::size_t>& cov_cols,
                                           const std::vector<double>& y,
                                           const std::string& bandwidth, bool rescale) {
    std::vector<std::vector<double>> points(ds.rows, std::vector<double>(cov_cols.size()));
    for (std::size_t r = 0; r < ds.rows; ++r)
        for (std::size_t c = 0; c < cov_cols.size(); ++c)
            points[r][c] = ds.data[cov_cols[c]][r];
    if (rescale) varfit::rescale_columns_unit_range(points);

    double threshold;
    if (bandwidth == "auto" || bandwidth == "sqrt")
        threshold = std::sqrt(static_cast<double>(ds.rows));
    else if (bandwidth == "cbrt")
        threshold = std::cbrt(static_cast<double>(ds.rows));
    else
        threshold = std::stod(bandwidth);
    return varfit::general_domain(points, y, threshold);
}

int cmd_estimate(const EstimateArgs& args) {
    const varfit::DatasetFile ds = varfit::read_dataset_csv(args.input);
    const std::size_t y_col = ds.column_index(args.response);
    std::vector<std::size_t> cov_cols;
    if (args.covariates.empty()) {
        for (std::size_t c = 0; c < ds.columns.size(); ++c)
            if (c != y_col) cov_cols.push_back(c);
    } else {
        for (const auto& name : split_names(args.covariates))
            cov_cols.push_back(ds.column_index(name));
    }
    if (cov_cols.empty()) throw varfit::data_error("no covariate columns selected");
    const std::vector<double>& y = ds.data[y_col];

    varfit::VarianceEstimate est;
    std::string method = args.method;
    if (method == "general") {
        est = estimate_pairwise(ds, cov_cols, y, args.bandwidth, args.rescale);
    } else {
        if (cov_cols.size() != 1)
            throw varfit::data_error("method '" + method + "' needs exactly one covariate");
        std::vector<double> x = ds.data[cov_cols[0]];
        std::vector<double> xs = x;
        std::sort(xs.begin(), xs.end());
        const varfit::SpacingKind spacing = varfit::detect_spacing(xs);
        if (spacing != varfit::SpacingKind::equal) {
            if (method == "tw" && spacing == varfit::SpacingKind::near_equal) {
                std::cerr << "warning: design is only nearly equally spaced; "
                             "falling back to the pairwise (general) method\n";
                est = estimate_pairwise(ds, cov_cols, y, args.bandwidth, args.rescale);
                method = "general";
            } else {
                throw varfit::precondition_error(
                    "method '" + method +
                    "' requires an equally spaced design; use --method general");
            }
        }
        if (method != "general") {
            varfit::Sample1D sample = varfit::make_equally_spaced_sample(x, y);
            const std::size_t n = sample.n();
            const auto resolve = [&](std::size_t lo) -> std::size_t {
                if (args.bandwidth == "auto" || args.bandwidth == "sqrt")
                    return varfit::sqrt_bandwidth(n, lo);
                if (args.bandwidth == "cbrt") return varfit::cbrt_bandwidth(n, lo);
                return static_cast<std::size_t>(std::stoul(args.bandwidth));
            };
            if (method == "tw") {
                const std::size_t m = resolve(2);
                est = varfit::lag_regression(sample, m);
                est.df = varfit::chi_square_df(varfit::build_tw_matrix(n, m));
            } else if (method == "ms") {
                const std::size_t L = resolve(3);
                est = varfit::fixed_window(sample, L);
                if (2 * L <= n)
                    est.df = varfit::chi_square_df(varfit::build_ms_matrix(n, L));
            } else if (method == "rice") {
                est = varfit::rice(sample);
            } else {
                throw varfit::precondition_error("unknown method: " + method);
            }
            if (args.alpha) {
                double g4;
                if (args.gamma4 == "estimate") {
                    if (est.value <= 0.0)
                        throw varfit::precondition_error(
                            "cannot estimate kurtosis from a zero variance estimate");
                    g4 = varfit::estimate_gamma4(sample, est.value);
                } else {
                    g4 = std::stod(args.gamma4);
                }
                est.ci = varfit::confidence_interval(est, g4, n, *args.alpha);
            }
        }
    }
    if (method == "general" && args.alpha)
        std::cerr << "warning: confidence intervals are not defined for the "
                     "pairwise method; --alpha ignored\n";

    if (args.as_json) {
        std::cout << json(est).dump(2) << '\n';
    } else {
        std::printf("sigma2_hat = %.6g  (method %s, bandwidth %.6g%s)\n", est.value,
                    varfit::to_string(est.method), est.bandwidth,
                    est.truncated ? ", truncated from negative" : "");
        if (est.truncated) std::printf("raw estimate  = %.6g\n", est.raw_value);
        if (est.df) std::printf("df            = %.6g\n", *est.df);
        if (est.ci)
            std::printf("%2.0f%% CI        = [%.6g, %.6g]\n", 100.0 * (1.0 - est.ci->alpha),
                        est.ci->lo, est.ci->hi);
    }
    return kExitOk;
}

struct SimulateArgs {
    bool table1 = false;
    std::string cell;
    std::size_t reps = 1000;
    std::uint64_t seed = 42;
    std::string out;
    bool histogram = false;
    std::size_t bins = 30;
    bool as_json = false;
    std::size_t threads = 0;
};

varfit::SimConfig parse_cell_spec(const std::string& spec) {
    const auto parts = split_names(spec);
    if (parts.size() != 5)
        throw varfit::data_error("cell spec must be 'n,sigma2,g,estimator,rule'");
    varfit::SimConfig cfg;
    cfg.n = std::stoul(parts[0]);
    cfg.sigma2 = std::stod(parts[1]);
    cfg.mean = varfit::mean_id_from_string(parts[2]);
    cfg.estimator = varfit::estimator_kind_from_string(parts[3]);
    if (parts[4] == "sqrt") cfg.rule = varfit::BandwidthRule::sqrt();
    else if (parts[4] == "cbrt") cfg.rule = varfit::BandwidthRule::cbrt();
    else if (parts[4] == "optimal") cfg.rule = varfit::BandwidthRule::optimal();
    else cfg.rule = varfit::BandwidthRule::fixed(std::stoul(parts[4]));
    return cfg;
}

int cmd_simulate(const SimulateArgs& args) {
    if (args.table1) {
        const varfit::Table1 table = varfit::run_table1(args.seed, args.reps, args.threads);
        const std::string path = args.out.empty() ? "table1.csv" : args.out;
        std::ofstream f(path);
        if (!f) throw varfit::data_error("cannot write " + path);
        varfit::write_table1_csv(f, table);
        if (args.as_json) {
            std::ofstream jf(path + ".json");
            jf << json(table).dump(2) << '\n';
        }
        std::printf("n     sigma2  g    tw(sqrt)  tw(cbrt)  ms(sqrt)  ms(cbrt)\n");
        for (const auto& row : table.rows)
            std::printf("%-5zu %-7.4g %-4s %9.6g %9.6g %9.6g %9.6g\n", row.n, row.sigma2,
                        varfit::to_string(row.mean), row.cells[0].rel_mse,
                        row.cells[1].rel_mse, row.cells[2].rel_mse, row.cells[3].rel_mse);
        std::printf("wrote %s\n", path.c_str());
        return kExitOk;
    }
    if (args.cell.empty())
        throw varfit::data_error("simulate needs --table1 or --cell");

    varfit::SimConfig cfg = parse_cell_spec(args.cell);
    cfg.reps = args.reps;
    cfg.master_seed = args.seed;
    cfg.keep_estimates = args.histogram;
    const varfit::SimReport report = varfit::run_cell(cfg, args.threads);

    const std::string path = args.out.empty() ? "cell.csv" : args.out;
    std::ofstream f(path);
    if (!f) throw varfit::data_error("cannot write " + path);
    varfit::write_cell_csv(f, report);
    if (args.as_json) {
        std::ofstream jf(path + ".json");
        jf << json(report).dump(2) << '\n';
    }
    if (args.histogram) {
        const varfit::Histogram hist = varfit::make_histogram(report.estimates, args.bins);
        const std::string hpath = path + ".hist.csv";
        std::ofstream hf(hpath);
        varfit::write_histogram_csv(hf, hist);
        std::printf("wrote %s\n", hpath.c_str());
    }
    std::printf("rel_mse = %.6g  bandwidth = %zu  negative = %zu/%zu\n", report.rel_mse,
                report.bandwidth, report.negative_count, report.reps);
    std::printf("wrote %s\n", path.c_str());
    return kExitOk;
}

struct AnalyzeArgs {
    std::size_t n = 0;
    double sigma2 = 1.0;
    double gamma3 = 0.0;
    double gamma4 = 3.0;
    std::string mean = "g1";
    std::string method = "tw";
    std::size_t bandwidth = 0;  // 0 = sqrt rule
    bool optimal_l = false;
    bool identities = false;
    std::string out;
};

int cmd_analyze(const AnalyzeArgs& args) {
    const varfit::NoiseMoments noise(args.sigma2, args.gamma3, args.gamma4);
    const varfit::MeanFunction g = varfit::MeanFunction::get(varfit::mean_id_from_string(args.mean));
    json out;
    out["n"] = args.n;
    out["noise"] = {{"sigma2", args.sigma2}, {"gamma3", args.gamma3}, {"gamma4", args.gamma4}};
    out["mean"] = args.mean;
    out["trend_J"] = varfit::trend_J(g).J;

    std::vector<double> gx(args.n);
    for (std::size_t i = 0; i < args.n; ++i)
        gx[i] = g(static_cast<double>(i + 1) / static_cast<double>(args.n));

    const bool is_tw = args.method == "tw";
    if (!is_tw && args.method != "ms")
        throw varfit::precondition_error("analyze: method must be tw or ms");
    const std::size_t bw = args.bandwidth
                               ? args.bandwidth
                               : varfit::sqrt_bandwidth(args.n, is_tw ? 2 : 3);
    out["method"] = args.method;
    out["bandwidth"] = bw;

    const varfit::BandedSymmetric mat =
        is_tw ? varfit::build_tw_matrix(args.n, bw) : varfit::build_ms_matrix(args.n, bw);
    const varfit::ExactMoments moments = varfit::exact_mse(mat, gx, noise);
    out["exact"] = moments;
    out["exact"]["rel_mse"] =
        static_cast<double>(args.n) * moments.mse / (2.0 * args.sigma2 * args.sigma2);
    out["df"] = varfit::chi_square_df(mat);
    if (!is_tw) out["asymptotic_mse"] = varfit::asymptotic_mse_ms(args.n, bw, noise);
    if (args.optimal_l) {
        out["optimal_L"] = varfit::optimal_L(args.n, noise);
        out["optimal_mse"] = varfit::optimal_mse_comparison(args.n, noise);
    }
    if (args.identities) out["identities"] = varfit::check_identities(args.n, bw);

    if (args.out.empty()) {
        std::cout << out.dump(2) << '\n';
    } else {
        std::ofstream f(args.out);
        if (!f) throw varfit::data_error("cannot write " + args.out);
        f << out.dump(2) << '\n';
        std::printf("wrote %s\n", args.out.c_str());
    }
    return kExitOk;
}

struct MatrixArgs {
    std::string type = "tw";
    std::size_t n = 0;
    std::size_t bandwidth = 0;
    std::string out;
};

int cmd_matrix(const MatrixArgs& args) {
    const varfit::BandedSymmetric mat = args.type == "tw"
                                            ? varfit::build_tw_matrix(args.n, args.bandwidth)
                                            : varfit::build_ms_matrix(args.n, args.bandwidth);
    if (args.out.empty()) {
        mat.dump_nonzero(std::cout);
    } else {
        std::ofstream f(args.out);
        if (!f) throw varfit::data_error("cannot write " + args.out);
        mat.dump_nonzero(f);
        std::printf("wrote %s\n", args.out.c_str());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"difference-based residual variance estimation"};
    app.require_subcommand(1);

    EstimateArgs est;
    auto* est_cmd = app.add_subcommand("estimate", "estimate sigma^2 from a CSV dataset");
    est_cmd->add_option("--input", est.input, "CSV file with header")->required();
    est_cmd->add_option("--response", est.response, "response column name")->required();
    est_cmd->add_option("--covariates", est.covariates,
                        "comma-separated covariate columns (default: all others)");
    est_cmd->add_option("--method", est.method, "tw|ms|rice|general")
        ->check(CLI::IsMember({"tw", "ms", "rice", "general"}));
    est_cmd->add_option("--bandwidth", est.bandwidth, "auto|sqrt|cbrt|value");
    est_cmd->add_option("--alpha", est.alpha, "confidence level for a CI")
        ->check(CLI::Range(1e-9, 1.0));
    est_cmd->add_option("--gamma4", est.gamma4, "3|estimate|value (kurtosis for the CI)");
    est_cmd->add_flag("--rescale", est.rescale, "map each covariate column onto [0,1]");
    est_cmd->add_flag("--json", est.as_json, "print the estimate as JSON");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "run the seeded simulation study");
    sim_cmd->add_flag("--table1", sim.table1, "full 18-setting, 4-estimator study");
    sim_cmd->add_option("--cell", sim.cell, "one setting: 'n,sigma2,g,estimator,rule'");
    sim_cmd->add_option("--reps", sim.reps, "replicates")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", sim.seed, "master seed");
    sim_cmd->add_option("--out", sim.out, "output CSV path");
    sim_cmd->add_flag("--histogram", sim.histogram, "also write a histogram CSV");
    sim_cmd->add_option("--bins", sim.bins, "histogram bins")->check(CLI::PositiveNumber);
    sim_cmd->add_flag("--json", sim.as_json, "also write a JSON report");
    sim_cmd->add_option("--threads", sim.threads, "worker threads (0 = auto)");

    AnalyzeArgs ana;
    auto* ana_cmd = app.add_subcommand("analyze", "exact and asymptotic diagnostics");
    ana_cmd->add_option("--n", ana.n, "sample size")->required()->check(CLI::PositiveNumber);
    ana_cmd->add_option("--sigma2", ana.sigma2, "noise variance");
    ana_cmd->add_option("--gamma3", ana.gamma3, "noise skewness");
    ana_cmd->add_option("--gamma4", ana.gamma4, "noise kurtosis (> 1)");
    ana_cmd->add_option("--mean", ana.mean, "g1|g2|g3")
        ->check(CLI::IsMember({"g1", "g2", "g3"}));
    ana_cmd->add_option("--method", ana.method, "tw|ms")
        ->check(CLI::IsMember({"tw", "ms"}));
    ana_cmd->add_option("--bandwidth", ana.bandwidth, "m or L (default: sqrt rule)");
    ana_cmd->add_flag("--optimal-L", ana.optimal_l, "include L_opt and optimal-MSE terms");
    ana_cmd->add_flag("--identities", ana.identities, "include coefficient/trace checks");
    ana_cmd->add_option("--out", ana.out, "write JSON here instead of stdout");

    MatrixArgs mat;
    auto* mat_cmd = app.add_subcommand("matrix", "dump an estimator matrix as CSV triples");
    mat_cmd->add_option("--type", mat.type, "tw|ms")
        ->check(CLI::IsMember({"tw", "ms"}));
    mat_cmd->add_option("--n", mat.n, "dimension")->required()->check(CLI::PositiveNumber);
    mat_cmd->add_option("--bandwidth", mat.bandwidth, "m or L")
        ->required()
        ->check(CLI::PositiveNumber);
    mat_cmd->add_option("--out", mat.out, "output path (default: stdout)");

    try {
        app.parse(argc, argv);
        if (est_cmd->parsed()) return cmd_estimate(est);
        if (sim_cmd->parsed()) return cmd_simulate(sim);
        if (ana_cmd->parsed()) return cmd_analyze(ana);
        if (mat_cmd->parsed()) return cmd_matrix(mat);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const varfit::precondition_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitPrecondition;
    } catch (const varfit::data_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::invalid_argument& e) {  // stod/stoul on malformed numbers
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
}
