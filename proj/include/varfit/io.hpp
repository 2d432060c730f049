#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "varfit/analytics.hpp"
#include "varfit/simulation.hpp"
#include "varfit/types.hpp"

namespace varfit {

inline std::string format_sig(double v, int digits = 17) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

/// Comma-separated numeric table with a mandatory header row, '.' decimal
/// point. Columns are stored column-major.
struct DatasetFile {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;  // data[c][row]
    std::size_t rows = 0;

    std::size_t column_index(const std::string& name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw data_error("no such column: " + name);
        return static_cast<std::size_t>(it - columns.begin());
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' '))
            cell.pop_back();
        std::size_t start = 0;
        while (start < cell.size() && cell[start] == ' ') ++start;
        out.push_back(cell.substr(start));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& cell, std::size_t row) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw data_error("row " + std::to_string(row) + ": cannot parse '" + cell + "'");
    if (!std::isfinite(v))
        throw data_error("row " + std::to_string(row) + ": non-finite value");
    return v;
}

}  // namespace detail

inline DatasetFile read_dataset_csv(std::istream& in) {
    DatasetFile ds;
    std::string line;
    if (!std::getline(in, line)) throw data_error("empty file");
    ds.columns = detail::split_csv_line(line);
    if (ds.columns.empty()) throw data_error("missing header row");
    ds.data.resize(ds.columns.size());

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++row;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != ds.columns.size())
            throw data_error("row " + std::to_string(row) + ": expected " +
                             std::to_string(ds.columns.size()) + " cells, got " +
                             std::to_string(cells.size()));
        for (std::size_t c = 0; c < cells.size(); ++c)
            ds.data[c].push_back(detail::parse_double(cells[c], row));
    }
    ds.rows = row;
    if (ds.rows < 3) throw data_error("need at least 3 data rows");
    return ds;
}

inline DatasetFile read_dataset_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw data_error("cannot open " + path);
    return read_dataset_csv(f);
}

enum class SpacingKind { equal, near_equal, irregular };

/// Uniform-gap detection on sorted x: `equal` within 1e-9 of the mean gap
/// (relative to the span), `near_equal` within 1e-6 (callers should warn and
/// fall back to the pairwise method), otherwise `irregular`.
inline SpacingKind detect_spacing(std::span<const double> x_sorted) {
    const std::size_t n = x_sorted.size();
    if (n < 3) return SpacingKind::irregular;
    const double span = x_sorted.back() - x_sorted.front();
    if (span <= 0.0) return SpacingKind::irregular;
    const double mean_gap = span / static_cast<double>(n - 1);
    double worst = 0.0;
    for (std::size_t i = 1; i < n; ++i)
        worst = std::max(worst, std::abs(x_sorted[i] - x_sorted[i - 1] - mean_gap));
    if (worst <= 1e-9 * span) return SpacingKind::equal;
    if (worst <= 1e-6 * span) return SpacingKind::near_equal;
    return SpacingKind::irregular;
}

/// Sorts rows by x and maps the uniform design onto the canonical x_i = i/n.
inline Sample1D make_equally_spaced_sample(std::vector<double> x, std::vector<double> y) {
    require(x.size() == y.size(), "make_equally_spaced_sample: size mismatch");
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ys(y.size());
    for (std::size_t i = 0; i < order.size(); ++i) ys[i] = y[order[i]];
    return Sample1D::equally_spaced(std::move(ys));
}

/// Affinely maps each covariate column onto [0, 1] (constant columns to 0).
inline void rescale_columns_unit_range(std::vector<std::vector<double>>& points) {
    if (points.empty()) return;
    const std::size_t dim = points.front().size();
    for (std::size_t c = 0; c < dim; ++c) {
        double lo = points[0][c], hi = points[0][c];
        for (const auto& p : points) {
            lo = std::min(lo, p[c]);
            hi = std::max(hi, p[c]);
        }
        const double span = hi - lo;
        for (auto& p : points) p[c] = span > 0.0 ? (p[c] - lo) / span : 0.0;
    }
}

// ---- JSON serialization -------------------------------------------------

inline void to_json(nlohmann::json& j, const ConfidenceInterval& ci) {
    j = {{"lo", ci.lo}, {"hi", ci.hi}, {"alpha", ci.alpha}};
}

inline void to_json(nlohmann::json& j, const VarianceEstimate& e) {
    j = {{"value", e.value},
         {"raw_value", e.raw_value},
         {"method", to_string(e.method)},
         {"bandwidth", e.bandwidth},
         {"truncated", e.truncated}};
    if (e.df) j["df"] = *e.df;
    if (e.ci) j["ci"] = *e.ci;
}

inline void to_json(nlohmann::json& j, const BandwidthRule& r) {
    j = {{"kind", r.kind == BandwidthRule::Kind::sqrt    ? "sqrt"
                  : r.kind == BandwidthRule::Kind::cbrt  ? "cbrt"
                  : r.kind == BandwidthRule::Kind::fixed ? "fixed"
                                                         : "optimal"}};
    if (r.kind == BandwidthRule::Kind::fixed) j["value"] = r.value;
}

inline void from_json(const nlohmann::json& j, BandwidthRule& r) {
    const std::string kind = j.at("kind");
    if (kind == "sqrt") r = BandwidthRule::sqrt();
    else if (kind == "cbrt") r = BandwidthRule::cbrt();
    else if (kind == "fixed") r = BandwidthRule::fixed(j.at("value").get<std::size_t>());
    else if (kind == "optimal") r = BandwidthRule::optimal();
    else throw data_error("unknown bandwidth rule: " + kind);
}

inline EstimatorKind estimator_kind_from_string(const std::string& s) {
    if (s == "tw") return EstimatorKind::tw;
    if (s == "ms") return EstimatorKind::ms;
    if (s == "rice") return EstimatorKind::rice;
    if (s == "lag") return EstimatorKind::lag;
    throw data_error("unknown estimator: " + s);
}

inline void to_json(nlohmann::json& j, const SimReport& r) {
    j = {{"n", r.n},
         {"sigma2", r.sigma2},
         {"mean", to_string(r.mean)},
         {"estimator", to_string(r.estimator)},
         {"rule", nlohmann::json(r.rule)},
         {"reps", r.reps},
         {"master_seed", r.master_seed},
         {"bandwidth", r.bandwidth},
         {"rel_mse", r.rel_mse},
         {"mse", r.mse},
         {"bias", r.bias},
         {"variance", r.variance},
         {"negative_count", r.negative_count}};
    if (r.ci_coverage) j["ci_coverage"] = *r.ci_coverage;
    if (!r.estimates.empty()) j["estimates"] = r.estimates;
}

inline void from_json(const nlohmann::json& j, SimReport& r) {
    r.n = j.at("n").get<std::size_t>();
    r.sigma2 = j.at("sigma2").get<double>();
    r.mean = mean_id_from_string(j.at("mean").get<std::string>());
    r.estimator = estimator_kind_from_string(j.at("estimator").get<std::string>());
    r.rule = j.at("rule").get<BandwidthRule>();
    r.reps = j.at("reps").get<std::size_t>();
    r.master_seed = j.at("master_seed").get<std::uint64_t>();
    r.bandwidth = j.at("bandwidth").get<std::size_t>();
    r.rel_mse = j.at("rel_mse").get<double>();
    r.mse = j.at("mse").get<double>();
    r.bias = j.at("bias").get<double>();
    r.variance = j.at("variance").get<double>();
    r.negative_count = j.at("negative_count").get<std::size_t>();
    if (j.contains("ci_coverage")) r.ci_coverage = j.at("ci_coverage").get<double>();
    if (j.contains("estimates")) r.estimates = j.at("estimates").get<std::vector<double>>();
}

inline bool operator==(const BandwidthRule& a, const BandwidthRule& b) {
    return a.kind == b.kind && (a.kind != BandwidthRule::Kind::fixed || a.value == b.value);
}

inline bool operator==(const SimReport& a, const SimReport& b) {
    return a.n == b.n && a.sigma2 == b.sigma2 && a.mean == b.mean &&
           a.estimator == b.estimator && a.rule == b.rule && a.reps == b.reps &&
           a.master_seed == b.master_seed && a.bandwidth == b.bandwidth &&
           a.rel_mse == b.rel_mse && a.mse == b.mse && a.bias == b.bias &&
           a.variance == b.variance && a.negative_count == b.negative_count &&
           a.ci_coverage == b.ci_coverage && a.estimates == b.estimates;
}

inline void to_json(nlohmann::json& j, const Table1Cell& c) {
    j = {{"estimator", to_string(c.estimator)},
         {"rule", nlohmann::json(c.rule)},
         {"bandwidth", c.bandwidth},
         {"rel_mse", c.rel_mse},
         {"negative_count", c.negative_count}};
}

inline void to_json(nlohmann::json& j, const Table1Row& r) {
    j = {{"n", r.n}, {"sigma2", r.sigma2}, {"mean", to_string(r.mean)},
         {"cells", r.cells}};
}

inline void to_json(nlohmann::json& j, const Table1& t) {
    j = {{"master_seed", t.master_seed}, {"reps", t.reps}, {"rows", t.rows}};
}

inline void to_json(nlohmann::json& j, const NormalityReport& r) {
    j = {{"mean", r.mean}, {"variance", r.variance}, {"ks", r.ks}, {"reps", r.reps}};
}

inline void to_json(nlohmann::json& j, const Histogram& h) {
    j = {{"edges", h.edges}, {"counts", h.counts}};
}

inline void to_json(nlohmann::json& j, const ExactMoments& m) {
    j = {{"bias", m.bias}, {"variance", m.variance}, {"mse", m.mse}};
}

inline void to_json(nlohmann::json& j, const OptimalMseComparison& c) {
    j = {{"mse_tw_opt", c.mse_tw},
         {"mse_ms_opt", c.mse_ms},
         {"ratio_second_order", c.ratio_second_order}};
}

inline void to_json(nlohmann::json& j, const IdentityReport& r) {
    j = {{"n", r.n},
         {"m", r.m},
         {"warn_large_m", r.warn_large_m},
         {"b_sum", r.b_sum},
         {"b_sum_pred", r.b_sum_pred},
         {"b_sum_dev", r.b_sum_dev},
         {"b2_sum", r.b2_sum},
         {"b2_sum_pred", r.b2_sum_pred},
         {"b2_sum_dev", r.b2_sum_dev},
         {"tr_d", r.tr_d},
         {"tr_d_expected", r.tr_d_expected},
         {"tr_d_dev", r.tr_d_dev}};
    if (r.ms_checked) {
        j["tr_m"] = r.tr_m;
        j["tr_m_expected"] = r.tr_m_expected;
        j["tr_m_dev"] = r.tr_m_dev;
        j["tr_m2"] = r.tr_m2;
        j["tr_m2_pred"] = r.tr_m2_pred;
        j["tr_m2_dev"] = r.tr_m2_dev;
        j["tr_diag_m2"] = r.tr_diag_m2;
        j["tr_diag_m2_pred"] = r.tr_diag_m2_pred;
        j["tr_diag_m2_dev"] = r.tr_diag_m2_dev;
    }
}

// ---- CSV reports ---------------------------------------------------------

inline void write_table1_csv(std::ostream& os, const Table1& t) {
    os << "n,sigma2,g,estimator,bandwidth_rule,rel_mse,negative_count\n";
    for (const auto& row : t.rows) {
        for (const auto& cell : row.cells) {
            os << row.n << ',' << format_sig(row.sigma2) << ',' << to_string(row.mean)
               << ',' << to_string(cell.estimator) << ','
               << (cell.rule.kind == BandwidthRule::Kind::sqrt ? "sqrt" : "cbrt") << ','
               << format_sig(cell.rel_mse) << ',' << cell.negative_count << '\n';
        }
    }
}

inline void write_cell_csv(std::ostream& os, const SimReport& r) {
    os << "n,sigma2,g,estimator,bandwidth_rule,rel_mse,negative_count\n";
    os << r.n << ',' << format_sig(r.sigma2) << ',' << to_string(r.mean) << ','
       << to_string(r.estimator) << ',' << to_string(r.rule) << ','
       << format_sig(r.rel_mse) << ',' << r.negative_count << '\n';
}

inline void write_histogram_csv(std::ostream& os, const Histogram& h) {
    os << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b)
        os << format_sig(h.edges[b]) << ',' << format_sig(h.edges[b + 1]) << ','
           << h.counts[b] << '\n';
}

inline void write_estimates_csv(std::ostream& os, std::span<const double> raw) {
    os << "replicate,raw_estimate\n";
    for (std::size_t r = 0; r < raw.size(); ++r)
        os << r << ',' << format_sig(raw[r]) << '\n';
}

}  // namespace varfit
