#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "varfit/analytics.hpp"
#include "varfit/estimators.hpp"
#include "varfit/numeric.hpp"
#include "varfit/types.hpp"

namespace varfit {

/// SplitMix64 finalizer: a bijection on 64-bit words.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Counter-based stream seed for replicate r. Injective in r for fixed
/// master: r -> master + (r+1) * odd-gamma is injective mod 2^64 and the
/// SplitMix64 finalizer is a bijection, so streams never collide.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t r) {
    return splitmix64(master + (r + 1) * 0x9E3779B97F4A7C15ULL);
}

enum class EstimatorKind { tw, ms, rice, lag };

inline const char* to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::tw: return "tw";
        case EstimatorKind::ms: return "ms";
        case EstimatorKind::rice: return "rice";
        case EstimatorKind::lag: return "lag";
    }
    return "?";
}

struct BandwidthRule {
    enum class Kind { sqrt, cbrt, fixed, optimal };
    Kind kind = Kind::sqrt;
    std::size_t value = 0;  // fixed only

    static BandwidthRule sqrt() { return {Kind::sqrt, 0}; }
    static BandwidthRule cbrt() { return {Kind::cbrt, 0}; }
    static BandwidthRule fixed(std::size_t k) { return {Kind::fixed, k}; }
    static BandwidthRule optimal() { return {Kind::optimal, 0}; }
};

inline std::string to_string(const BandwidthRule& r) {
    switch (r.kind) {
        case BandwidthRule::Kind::sqrt: return "sqrt";
        case BandwidthRule::Kind::cbrt: return "cbrt";
        case BandwidthRule::Kind::fixed: return "fixed(" + std::to_string(r.value) + ")";
        case BandwidthRule::Kind::optimal: return "optimal";
    }
    return "?";
}

/// One Monte Carlo setting. Draws are fully determined by
/// (n, sigma2, mean, master_seed); the estimator never consumes randomness,
/// so every estimator column sees the same data.
struct SimConfig {
    std::size_t n = 0;
    double sigma2 = 1.0;
    MeanId mean = MeanId::g1;
    EstimatorKind estimator = EstimatorKind::tw;
    BandwidthRule rule = BandwidthRule::sqrt();
    std::size_t reps = 1000;
    std::uint64_t master_seed = 0;
    std::optional<double> alpha;  // CI level; enables coverage accounting
    double gamma4_ci = 3.0;       // kurtosis treated as known for the CI
    bool keep_estimates = false;  // retain raw per-replicate estimates
};

struct SimReport {
    std::size_t n = 0;
    double sigma2 = 0.0;
    MeanId mean = MeanId::g1;
    EstimatorKind estimator = EstimatorKind::tw;
    BandwidthRule rule = BandwidthRule::sqrt();
    std::size_t reps = 0;
    std::uint64_t master_seed = 0;
    std::size_t bandwidth = 0;  // resolved m, L, or lag

    double rel_mse = 0.0;  // n * mse / (2 sigma^4)
    double mse = 0.0;      // of the zero-truncated estimates
    double bias = 0.0;
    double variance = 0.0;
    std::size_t negative_count = 0;
    std::optional<double> ci_coverage;
    std::vector<double> estimates;  // raw (untruncated), present iff requested
};

inline std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("VARFIT_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? hc : 1;
}

inline std::size_t resolve_bandwidth(EstimatorKind est, const BandwidthRule& rule,
                                     std::size_t n, double sigma2) {
    switch (est) {
        case EstimatorKind::tw:
            switch (rule.kind) {
                case BandwidthRule::Kind::sqrt: return sqrt_bandwidth(n, 2);
                case BandwidthRule::Kind::cbrt: return cbrt_bandwidth(n, 2);
                case BandwidthRule::Kind::fixed:
                    require(rule.value >= 2 && rule.value < n, "bandwidth: need 2 <= m < n");
                    return rule.value;
                case BandwidthRule::Kind::optimal:
                    throw precondition_error("bandwidth: no optimal rule for tw");
            }
            break;
        case EstimatorKind::ms:
            switch (rule.kind) {
                case BandwidthRule::Kind::sqrt: return sqrt_bandwidth(n, 3);
                case BandwidthRule::Kind::cbrt: return cbrt_bandwidth(n, 3);
                case BandwidthRule::Kind::fixed:
                    require(rule.value >= 3 && rule.value <= n - 1,
                            "bandwidth: need 3 <= L <= n-1");
                    return rule.value;
                case BandwidthRule::Kind::optimal:
                    return optimal_L(n, NoiseMoments::normal(sigma2));
            }
            break;
        case EstimatorKind::rice:
            return 1;
        case EstimatorKind::lag:
            require(rule.kind == BandwidthRule::Kind::fixed,
                    "bandwidth: lag statistic needs fixed(k)");
            require(rule.value >= 1 && rule.value <= n - 1, "bandwidth: need 1 <= k <= n-1");
            return rule.value;
    }
    throw precondition_error("bandwidth: unsupported estimator/rule combination");
}

/// Standard-normal draws scaled to sigma and shifted by the trend; the z
/// stream depends only on the seed, so settings differing in sigma2 or mean
/// share their standardized noise.
inline std::vector<double> generate_sample(std::span<const double> trend, double sigma,
                                           std::uint64_t stream_seed) {
    std::mt19937_64 eng(stream_seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> y(trend.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = trend[i] + sigma * z(eng);
    return y;
}

namespace detail {

inline double evaluate_estimator(EstimatorKind est, std::vector<double> y,
                                 std::size_t bandwidth) {
    switch (est) {
        case EstimatorKind::tw:
            return lag_regression(Sample1D::equally_spaced(std::move(y)), bandwidth).raw_value;
        case EstimatorKind::ms:
            return fixed_window(Sample1D::equally_spaced(std::move(y)), bandwidth)
                .raw_value;
        case EstimatorKind::rice:
            return rice(Sample1D::equally_spaced(std::move(y))).raw_value;
        case EstimatorKind::lag: {
            // Single lag statistic; avoids building the whole lag table.
            const std::size_t n = y.size();
            const std::size_t k = bandwidth;
            double acc = 0.0;
            for (std::size_t i = 0; i + k < n; ++i) {
                const double diff = y[i + k] - y[i];
                acc += diff * diff;
            }
            return acc / (2.0 * static_cast<double>(n - k));
        }
    }
    throw precondition_error("evaluate_estimator: unknown estimator");
}

/// Runs f(r) over r in [0, reps) on `threads` workers in contiguous blocks.
template <typename F>
inline void parallel_replicates(std::size_t reps, std::size_t threads, F&& f) {
    threads = std::min(std::max<std::size_t>(threads, 1), reps);
    if (threads == 1) {
        for (std::size_t r = 0; r < reps; ++r) f(r);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t block = (reps + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t lo = t * block;
        const std::size_t hi = std::min(lo + block, reps);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &f] {
            for (std::size_t r = lo; r < hi; ++r) f(r);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// Raw per-replicate estimates for a config; index r is replicate r.
/// Bit-identical for identical (config, master_seed) at any thread count.
inline std::vector<double> simulate_raw_estimates(const SimConfig& cfg, std::size_t threads = 0) {
    require(cfg.reps >= 1, "run_cell: need reps >= 1");
    require(cfg.n >= 3, "run_cell: need n >= 3");
    require(cfg.sigma2 > 0.0, "run_cell: sigma2 must be positive");
    const std::size_t bandwidth = resolve_bandwidth(cfg.estimator, cfg.rule, cfg.n, cfg.sigma2);

    const MeanFunction g = MeanFunction::get(cfg.mean);
    std::vector<double> trend(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i)
        trend[i] = g(static_cast<double>(i + 1) / static_cast<double>(cfg.n));
    const double sigma = std::sqrt(cfg.sigma2);

    std::vector<double> raw(cfg.reps);
    detail::parallel_replicates(cfg.reps, resolve_threads(threads), [&](std::size_t r) {
        auto y = generate_sample(trend, sigma, derive_stream_seed(cfg.master_seed, r));
        raw[r] = detail::evaluate_estimator(cfg.estimator, std::move(y), bandwidth);
    });
    return raw;
}

/// One simulation cell: draw, estimate, truncate negatives to zero for the
/// MSE while keeping raw values, and aggregate order-independently.
inline SimReport run_cell(const SimConfig& cfg, std::size_t threads = 0) {
    std::vector<double> raw = simulate_raw_estimates(cfg, threads);
    const std::size_t reps = cfg.reps;

    SimReport rep;
    rep.n = cfg.n;
    rep.sigma2 = cfg.sigma2;
    rep.mean = cfg.mean;
    rep.estimator = cfg.estimator;
    rep.rule = cfg.rule;
    rep.reps = reps;
    rep.master_seed = cfg.master_seed;
    rep.bandwidth = resolve_bandwidth(cfg.estimator, cfg.rule, cfg.n, cfg.sigma2);

    std::vector<double> trunc(reps), sq_err(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        trunc[r] = std::max(raw[r], 0.0);
        const double e = trunc[r] - cfg.sigma2;
        sq_err[r] = e * e;
        if (raw[r] < 0.0) ++rep.negative_count;
    }
    const double inv = 1.0 / static_cast<double>(reps);
    const double mean_t = pairwise_sum(trunc) * inv;
    rep.mse = pairwise_sum(sq_err) * inv;
    rep.bias = mean_t - cfg.sigma2;
    rep.variance = rep.mse - rep.bias * rep.bias;
    rep.rel_mse = static_cast<double>(cfg.n) * rep.mse / (2.0 * cfg.sigma2 * cfg.sigma2);

    if (cfg.alpha) {
        const double alpha = *cfg.alpha;
        require(alpha > 0.0 && alpha < 1.0, "run_cell: alpha must lie in (0, 1)");
        const double z = normal_upper_quantile(alpha / 2.0);
        require(static_cast<double>(cfg.n) > (cfg.gamma4_ci - 1.0) * z * z,
                "run_cell: CI precondition n > (gamma4-1) z^2 violated");
        const double half = z * std::sqrt((cfg.gamma4_ci - 1.0) / static_cast<double>(cfg.n));
        std::size_t covered = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            const double lo = trunc[r] / (1.0 + half);
            const double hi = trunc[r] / (1.0 - half);
            if (lo <= cfg.sigma2 && cfg.sigma2 <= hi) ++covered;
        }
        rep.ci_coverage = static_cast<double>(covered) * inv;
    }

    if (cfg.keep_estimates) rep.estimates = std::move(raw);
    return rep;
}

struct Table1Cell {
    EstimatorKind estimator = EstimatorKind::tw;
    BandwidthRule rule = BandwidthRule::sqrt();
    std::size_t bandwidth = 0;
    double rel_mse = 0.0;
    std::size_t negative_count = 0;
};

struct Table1Row {
    std::size_t n = 0;
    double sigma2 = 0.0;
    MeanId mean = MeanId::g1;
    std::array<Table1Cell, 4> cells;  // tw/sqrt, tw/cbrt, ms/sqrt, ms/cbrt
};

struct Table1 {
    std::uint64_t master_seed = 0;
    std::size_t reps = 0;
    std::vector<Table1Row> rows;  // 18 rows: n x sigma2 x g
};

/// The 18-setting study: n in {30, 100, 1000}, sigma2 in {0.25, 4},
/// g in {g1, g2, g3}; four estimator columns per setting.
inline Table1 run_table1(std::uint64_t master_seed, std::size_t reps, std::size_t threads = 0) {
    require(reps >= 100, "run_table1: need reps >= 100");
    Table1 table;
    table.master_seed = master_seed;
    table.reps = reps;
    const std::array<std::pair<EstimatorKind, BandwidthRule>, 4> columns = {{
        {EstimatorKind::tw, BandwidthRule::sqrt()},
        {EstimatorKind::tw, BandwidthRule::cbrt()},
        {EstimatorKind::ms, BandwidthRule::sqrt()},
        {EstimatorKind::ms, BandwidthRule::cbrt()},
    }};
    for (std::size_t n : {std::size_t{30}, std::size_t{100}, std::size_t{1000}}) {
        for (double sigma2 : {0.25, 4.0}) {
            for (MeanId mean : {MeanId::g1, MeanId::g2, MeanId::g3}) {
                Table1Row row;
                row.n = n;
                row.sigma2 = sigma2;
                row.mean = mean;
                for (std::size_t c = 0; c < columns.size(); ++c) {
                    SimConfig cfg;
                    cfg.n = n;
                    cfg.sigma2 = sigma2;
                    cfg.mean = mean;
                    cfg.estimator = columns[c].first;
                    cfg.rule = columns[c].second;
                    cfg.reps = reps;
                    cfg.master_seed = master_seed;
                    const SimReport rep = run_cell(cfg, threads);
                    row.cells[c] = {cfg.estimator, cfg.rule, rep.bandwidth, rep.rel_mse,
                                    rep.negative_count};
                }
                table.rows.push_back(row);
            }
        }
    }
    return table;
}

struct NormalityReport {
    double mean = 0.0;      // of the standardized statistic
    double variance = 0.0;
    double ks = 0.0;        // Kolmogorov-Smirnov distance to N(0,1)
    std::size_t reps = 0;
};

/// Standardizes sqrt(n)(stat - sigma2) by the limiting standard deviation:
/// sqrt(gamma4) sigma^2 for a single lag statistic, sqrt(gamma4 - 1) sigma^2
/// for the regression estimators. Raw (untruncated) values are used; the
/// noise is normal, so gamma4 = 3.
inline NormalityReport normality_diagnostic(const SimConfig& cfg, std::size_t threads = 0) {
    const std::vector<double> raw = simulate_raw_estimates(cfg, threads);
    const double gamma4 = 3.0;
    const double scale = cfg.estimator == EstimatorKind::lag ? gamma4 : gamma4 - 1.0;
    const double sd = std::sqrt(scale) * cfg.sigma2;
    const double root_n = std::sqrt(static_cast<double>(cfg.n));

    std::vector<double> t(raw.size());
    for (std::size_t r = 0; r < raw.size(); ++r)
        t[r] = root_n * (raw[r] - cfg.sigma2) / sd;

    NormalityReport out;
    out.reps = t.size();
    const double inv = 1.0 / static_cast<double>(t.size());
    out.mean = pairwise_sum(t) * inv;
    std::vector<double> dev(t.size());
    for (std::size_t r = 0; r < t.size(); ++r) {
        const double d = t[r] - out.mean;
        dev[r] = d * d;
    }
    out.variance = pairwise_sum(dev) * inv;

    std::sort(t.begin(), t.end());
    double ks = 0.0;
    const double nn = static_cast<double>(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double phi = normal_cdf(t[i]);
        ks = std::max(ks, std::max(phi - static_cast<double>(i) / nn,
                                   static_cast<double>(i + 1) / nn - phi));
    }
    out.ks = ks;
    return out;
}

struct Histogram {
    std::vector<double> edges;       // bins + 1, equal width over [min, max]
    std::vector<std::size_t> counts; // bins, summing to the sample size
};

inline Histogram make_histogram(std::span<const double> values, std::size_t bins) {
    require(bins >= 1, "make_histogram: need at least one bin");
    require(!values.empty(), "make_histogram: empty sample");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    double lo = *lo_it, hi = *hi_it;
    if (lo == hi) hi = lo + 1.0;  // degenerate sample: one unit-wide bin span
    Histogram h;
    h.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b)
        h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
    h.edges.front() = lo;
    h.edges.back() = hi;
    h.counts.assign(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double v : values) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        if (b >= bins) b = bins - 1;  // right edge closes the last bin
        ++h.counts[b];
    }
    return h;
}

struct HistogramExport {
    SimReport report;  // includes raw estimates
    Histogram histogram;
};

/// Runs the cell with per-replicate retention and bins the raw estimates.
inline HistogramExport histogram_export(const SimConfig& cfg, std::size_t bins = 30,
                                        std::size_t threads = 0) {
    SimConfig with_raw = cfg;
    with_raw.keep_estimates = true;
    HistogramExport out{run_cell(with_raw, threads), {}};
    out.histogram = make_histogram(out.report.estimates, bins);
    return out;
}

}  // namespace varfit
