#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace varfit {

/// Malformed or unusable input data (files, columns, non-finite values).
class data_error : public std::runtime_error {
  public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

/// A numeric precondition does not hold (bandwidth range, moment bounds, ...).
class precondition_error : public std::invalid_argument {
  public:
    explicit precondition_error(const std::string& what) : std::invalid_argument(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw precondition_error(msg);
}

enum class Method { rice, tw_wls, tw_ols, tw_gls, ms, general };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::rice: return "rice";
        case Method::tw_wls: return "tw-wls";
        case Method::tw_ols: return "tw-ols";
        case Method::tw_gls: return "tw-gls";
        case Method::ms: return "ms";
        case Method::general: return "general";
    }
    return "?";
}

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
    double alpha = 0.0;
};

/// Output of a variance estimator. `value` is truncated at zero; the
/// untruncated `raw_value` is kept for histograms and diagnostics.
struct VarianceEstimate {
    double value = 0.0;
    double raw_value = 0.0;
    Method method = Method::rice;
    double bandwidth = 0.0;  // lag count m or L; distance threshold for `general`
    bool truncated = false;
    std::optional<double> df;
    std::optional<ConfidenceInterval> ci;

    static VarianceEstimate from_raw(double raw, Method method, double bandwidth) {
        VarianceEstimate e;
        e.raw_value = raw;
        e.value = std::max(raw, 0.0);
        e.truncated = raw < 0.0;
        e.method = method;
        e.bandwidth = bandwidth;
        return e;
    }
};

/// Moments of the error law: variance sigma2, standardized skewness gamma3
/// and kurtosis gamma4 (> 1). rho = (gamma4-1)/gamma4 is always derived.
class NoiseMoments {
  public:
    NoiseMoments(double sigma2, double gamma3, double gamma4)
        : sigma2_(sigma2), gamma3_(gamma3), gamma4_(gamma4) {
        require(sigma2 > 0.0, "NoiseMoments: sigma2 must be positive");
        require(gamma4 > 1.0, "NoiseMoments: gamma4 must exceed 1");
    }

    static NoiseMoments normal(double sigma2) { return {sigma2, 0.0, 3.0}; }

    double sigma2() const { return sigma2_; }
    double gamma3() const { return gamma3_; }
    double gamma4() const { return gamma4_; }
    double rho() const { return (gamma4_ - 1.0) / gamma4_; }
    /// var(eps^2) = (gamma4 - 1) sigma^4
    double var_eps2() const { return (gamma4_ - 1.0) * sigma2_ * sigma2_; }

  private:
    double sigma2_;
    double gamma3_;
    double gamma4_;
};

/// One regression dataset: nondecreasing design points x and responses y.
/// The equally-spaced flag is set iff x_i = i/n (absolute tolerance 1e-12).
class Sample1D {
  public:
    Sample1D(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        require(x_.size() == y_.size(), "Sample1D: x and y must have equal length");
        require(x_.size() >= 2, "Sample1D: need at least 2 observations");
        for (std::size_t i = 0; i < x_.size(); ++i) {
            if (!std::isfinite(x_[i]) || !std::isfinite(y_[i]))
                throw data_error("Sample1D: non-finite value at row " + std::to_string(i));
            if (i > 0 && x_[i] < x_[i - 1])
                throw data_error("Sample1D: x must be nondecreasing");
        }
        const auto n = static_cast<double>(x_.size());
        equally_spaced_ = true;
        for (std::size_t i = 0; i < x_.size(); ++i) {
            if (std::abs(x_[i] - static_cast<double>(i + 1) / n) > 1e-12) {
                equally_spaced_ = false;
                break;
            }
        }
    }

    /// Builds the canonical equally spaced design x_i = i/n over the given y.
    static Sample1D equally_spaced(std::vector<double> y) {
        const auto n = y.size();
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i)
            x[i] = static_cast<double>(i + 1) / static_cast<double>(n);
        return {std::move(x), std::move(y)};
    }

    std::size_t n() const { return y_.size(); }
    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& y() const { return y_; }
    bool is_equally_spaced() const { return equally_spaced_; }

  private:
    std::vector<double> x_;
    std::vector<double> y_;
    bool equally_spaced_ = false;
};

enum class DenominatorMode { per_lag, fixed_l };

/// Mean squared half-differences per lag: s_k (per-lag divisor 2(n-k)) or
/// z_k (fixed divisor 2(n-L), sums over i = 1..n-L only).
struct LagStats {
    DenominatorMode mode = DenominatorMode::per_lag;
    std::size_t m = 0;            // max lag (m, or L in fixed-L mode)
    std::vector<double> stats;    // stats[k-1] = s_k or z_k
    std::vector<double> d;        // d[k-1] = k^2/n^2
    std::vector<double> w;        // w[k-1] = (n-k)/N, per-lag mode only
    double pair_count = 0.0;      // N
};

struct RegressionFit {
    double beta0 = 0.0;
    double beta1 = 0.0;
    Method method = Method::tw_wls;
};

}  // namespace varfit
