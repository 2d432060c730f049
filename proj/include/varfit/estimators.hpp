#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "varfit/numeric.hpp"
#include "varfit/types.hpp"

namespace varfit {

enum class FitMethod { wls, ols, gls };

/// Regression design shared by the lag-based estimator and its matrix form:
/// covariates d_k = k^2/n^2, weights w_k = (n-k)/N with N = nm - m(m+1)/2.
struct TWDesign {
    std::vector<double> d;
    std::vector<double> w;
    double pair_count = 0.0;  // N
    double dbar = 0.0;        // sum_k w_k d_k
    double var_d = 0.0;       // sum_k w_k (d_k - dbar)^2
};

inline TWDesign tw_design(std::size_t n, std::size_t m) {
    require(m >= 1 && m < n, "tw_design: need 1 <= m < n");
    TWDesign ds;
    ds.d.resize(m);
    ds.w.resize(m);
    const double nn = static_cast<double>(n);
    ds.pair_count = nn * static_cast<double>(m) -
                    static_cast<double>(m) * static_cast<double>(m + 1) / 2.0;
    for (std::size_t k = 1; k <= m; ++k) {
        const double kk = static_cast<double>(k);
        ds.d[k - 1] = kk * kk / (nn * nn);
        ds.w[k - 1] = (nn - kk) / ds.pair_count;
    }
    for (std::size_t k = 0; k < m; ++k) ds.dbar += ds.w[k] * ds.d[k];
    for (std::size_t k = 0; k < m; ++k) {
        const double c = ds.d[k] - ds.dbar;
        ds.var_d += ds.w[k] * c * c;
    }
    return ds;
}

/// Lag statistics by direct summation, one pass per lag.
///   per_lag:  stats[k-1] = s_k = sum_{i=1}^{n-k} (y_{i+k}-y_i)^2 / (2(n-k))
///   fixed_l:  stats[k-1] = z_k = sum_{i=1}^{n-L} (y_{i+k}-y_i)^2 / (2(n-L))
inline LagStats compute_lag_stats(const Sample1D& sample, std::size_t m,
                                  DenominatorMode mode = DenominatorMode::per_lag) {
    const std::size_t n = sample.n();
    require(sample.is_equally_spaced(),
            "compute_lag_stats: design must be equally spaced (use general_domain otherwise)");
    if (mode == DenominatorMode::per_lag)
        require(m >= 1 && m <= n - 1, "compute_lag_stats: need 1 <= m <= n-1");
    else
        require(m >= 3 && m <= n - 1, "compute_lag_stats: need 3 <= L <= n-1");

    const auto& y = sample.y();
    LagStats ls;
    ls.mode = mode;
    ls.m = m;
    ls.stats.resize(m);
    ls.d.resize(m);
    const double nn = static_cast<double>(n);
    for (std::size_t k = 1; k <= m; ++k)
        ls.d[k - 1] = static_cast<double>(k) * static_cast<double>(k) / (nn * nn);

    if (mode == DenominatorMode::per_lag) {
        const TWDesign ds = tw_design(n, m);
        ls.w = ds.w;
        ls.pair_count = ds.pair_count;
        for (std::size_t k = 1; k <= m; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i + k < n; ++i) {
                const double diff = y[i + k] - y[i];
                acc += diff * diff;
            }
            ls.stats[k - 1] = acc / (2.0 * (nn - static_cast<double>(k)));
        }
    } else {
        const std::size_t L = m;
        ls.pair_count = static_cast<double>(L) * (nn - static_cast<double>(L));
        for (std::size_t k = 1; k <= L; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n - L; ++i) {
                const double diff = y[i + k] - y[i];
                acc += diff * diff;
            }
            ls.stats[k - 1] = acc / (2.0 * (nn - static_cast<double>(L)));
        }
    }
    return ls;
}

/// First-order difference estimator: sum (y_i - y_{i-1})^2 / (2(n-1)).
inline VarianceEstimate rice(const Sample1D& sample) {
    const std::size_t n = sample.n();
    require(n >= 2, "rice: need n >= 2");
    const auto& y = sample.y();
    double acc = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double diff = y[i] - y[i - 1];
        acc += diff * diff;
    }
    return VarianceEstimate::from_raw(acc / (2.0 * static_cast<double>(n - 1)),
                                      Method::rice, 1.0);
}

namespace detail {

// Weighted least squares line fit via centered 2x2 normal equations.
// Weights need not be normalized.
inline RegressionFit linear_fit(std::span<const double> d, std::span<const double> s,
                                std::span<const double> w, Method tag) {
    const std::size_t m = d.size();
    double sw = 0.0, dbar = 0.0, sbar = 0.0;
    for (std::size_t k = 0; k < m; ++k) sw += w[k];
    for (std::size_t k = 0; k < m; ++k) {
        dbar += w[k] * d[k];
        sbar += w[k] * s[k];
    }
    dbar /= sw;
    sbar /= sw;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double c = d[k] - dbar;
        num += w[k] * (s[k] - sbar) * c;
        den += w[k] * c * c;
    }
    require(den > 0.0, "linear_fit: need at least 2 distinct covariate values");
    RegressionFit fit;
    fit.beta1 = num / den;
    fit.beta0 = sbar - fit.beta1 * dbar;
    fit.method = tag;
    return fit;
}

// GLS with compound-symmetry Sigma = c{(1-rho)I + rho 11^T}. The scalar c and
// the factor 1/(1-rho) cancel from the normal equations, leaving the weight
// matrix V = I - alpha 11^T with alpha = rho/(1 - rho + m rho). Solved
// literally by Cramer's rule so the GLS-equals-OLS identity under compound
// symmetry stays a genuine cross-check rather than an alias.
inline RegressionFit gls_fit(std::span<const double> d, std::span<const double> s,
                             double rho) {
    const std::size_t m = d.size();
    const double mm = static_cast<double>(m);
    const double alpha = rho / (1.0 - rho + mm * rho);

    // Shift covariate and response to their plain means before forming the
    // normal equations; the change of basis leaves the GLS solution intact
    // and avoids the cancellation in the uncentered cross sums.
    double d0 = 0.0, s0 = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        d0 += d[k];
        s0 += s[k];
    }
    d0 /= mm;
    s0 /= mm;

    double sd = 0.0, ss = 0.0, sdd = 0.0, sds = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double u = d[k] - d0;
        const double v = s[k] - s0;
        sd += u;
        ss += v;
        sdd += u * u;
        sds += u * v;
    }
    const double a11 = mm - alpha * mm * mm;
    const double a12 = sd * (1.0 - alpha * mm);
    const double a22 = sdd - alpha * sd * sd;
    const double b1 = ss * (1.0 - alpha * mm);
    const double b2 = sds - alpha * sd * ss;
    const double det = a11 * a22 - a12 * a12;
    require(det != 0.0, "gls_fit: singular design");
    RegressionFit fit;
    fit.beta1 = (a11 * b2 - a12 * b1) / det;
    fit.beta0 = (b1 * a22 - b2 * a12) / det + s0 - fit.beta1 * d0;
    fit.method = Method::tw_gls;
    return fit;
}

}  // namespace detail

/// Fits stats[k] = beta0 + beta1 d_k by the requested least squares method.
/// GLS needs the noise moments only through rho; by compound symmetry it
/// coincides with OLS.
inline RegressionFit lag_regression_fit(
    const Sample1D& sample, std::size_t m, FitMethod method = FitMethod::wls,
    const NoiseMoments& gls_moments = NoiseMoments::normal(1.0)) {
    require(m >= 2, "lag_regression: need m >= 2 to identify the intercept");
    require(m < sample.n(), "lag_regression: need m < n");
    const LagStats ls = compute_lag_stats(sample, m, DenominatorMode::per_lag);
    switch (method) {
        case FitMethod::wls:
            return detail::linear_fit(ls.d, ls.stats, ls.w, Method::tw_wls);
        case FitMethod::ols: {
            std::vector<double> uw(m, 1.0 / static_cast<double>(m));
            return detail::linear_fit(ls.d, ls.stats, uw, Method::tw_ols);
        }
        case FitMethod::gls:
            return detail::gls_fit(ls.d, ls.stats, gls_moments.rho());
    }
    throw precondition_error("lag_regression: unknown fit method");
}

/// Variance estimate as the intercept of the lag-statistic regression.
inline VarianceEstimate lag_regression(
    const Sample1D& sample, std::size_t m, FitMethod method = FitMethod::wls,
    const NoiseMoments& gls_moments = NoiseMoments::normal(1.0)) {
    const RegressionFit fit = lag_regression_fit(sample, m, method, gls_moments);
    return VarianceEstimate::from_raw(fit.beta0, fit.method, static_cast<double>(m));
}

/// Closed-form weights a_k = 3{3L^2+3L+2-6(2L+1)k+10k^2}/{L(L-1)(L-2)},
/// k = 1..L, with a_0 = 0 at index 0. They sum to exactly 1.
inline std::vector<double> fixed_window_weights(std::size_t L) {
    require(L >= 3, "fixed_window_weights: need L >= 3");
    const double LL = static_cast<double>(L);
    const double denom = LL * (LL - 1.0) * (LL - 2.0);
    std::vector<double> a(L + 1, 0.0);
    for (std::size_t k = 1; k <= L; ++k) {
        const double kk = static_cast<double>(k);
        a[k] = 3.0 * (3.0 * LL * LL + 3.0 * LL + 2.0 - 6.0 * (2.0 * LL + 1.0) * kk +
                      10.0 * kk * kk) /
               denom;
    }
    return a;
}

/// Fixed-window difference estimator: sum_k a_k z_k.
inline VarianceEstimate fixed_window(const Sample1D& sample, std::size_t L) {
    require(L >= 3, "fixed_window: need L >= 3");
    require(L <= sample.n() - 1, "fixed_window: need L <= n-1");
    const LagStats ls = compute_lag_stats(sample, L, DenominatorMode::fixed_l);
    const std::vector<double> a = fixed_window_weights(L);
    double acc = 0.0;
    for (std::size_t k = 1; k <= L; ++k) acc += a[k] * ls.stats[k - 1];
    return VarianceEstimate::from_raw(acc, Method::ms, static_cast<double>(L));
}

/// Pairwise difference regression on an arbitrary normed domain: ordinary
/// least squares of s_ij = (y_i - y_j)^2 / 2 on d_ij = ||x_i - x_j||^2 over
/// all pairs with d_ij <= m. Ties (d_ij = 0) are retained; they carry direct
/// information on the variance. On a 1-D equally spaced design whose retained
/// pairs are exactly lags 1..m0 this reproduces the lag-regression WLS fit.
inline VarianceEstimate general_domain(const std::vector<std::vector<double>>& points,
                                       std::span<const double> y, double m) {
    const std::size_t n = points.size();
    require(n == y.size(), "general_domain: points and y size mismatch");
    require(n >= 2, "general_domain: need at least 2 observations");
    require(m > 0.0, "general_domain: bandwidth must be positive");
    const std::size_t dim = points.front().size();
    for (const auto& p : points)
        if (p.size() != dim) throw data_error("general_domain: ragged covariate vectors");

    const auto sq_dist = [&](std::size_t i, std::size_t j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
            const double diff = points[i][c] - points[j][c];
            acc += diff * diff;
        }
        return acc;
    };

    // Two passes: means first, then centered sums, for a well-conditioned fit.
    double count = 0.0, dmean = 0.0, smean = 0.0;
    double dmin = 0.0, dmax = 0.0;
    bool first = true;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dij = sq_dist(i, j);
            if (dij > m) continue;
            const double diff = y[i] - y[j];
            count += 1.0;
            dmean += dij;
            smean += 0.5 * diff * diff;
            dmin = first ? dij : std::min(dmin, dij);
            dmax = first ? dij : std::max(dmax, dij);
            first = false;
        }
    }
    require(count >= 2.0, "general_domain: fewer than 2 pairs within bandwidth");
    require(dmax > dmin, "general_domain: all retained squared distances identical");
    dmean /= count;
    smean /= count;

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dij = sq_dist(i, j);
            if (dij > m) continue;
            const double diff = y[i] - y[j];
            const double sij = 0.5 * diff * diff;
            num += (dij - dmean) * (sij - smean);
            den += (dij - dmean) * (dij - dmean);
        }
    }
    const double beta1 = num / den;
    const double beta0 = smean - beta1 * dmean;
    return VarianceEstimate::from_raw(beta0, Method::general, m);
}

/// Approximate 1-alpha interval
///   [ v / (1 + z sqrt((gamma4-1)/n)),  v / (1 - z sqrt((gamma4-1)/n)) ]
/// built on the truncated estimate v >= 0. Requires n > (gamma4-1) z^2 so the
/// upper denominator stays positive.
inline ConfidenceInterval confidence_interval(const VarianceEstimate& est, double gamma4,
                                              std::size_t n, double alpha) {
    require(alpha > 0.0 && alpha < 1.0, "confidence_interval: alpha must lie in (0, 1)");
    require(gamma4 > 1.0, "confidence_interval: gamma4 must exceed 1");
    const double z = normal_upper_quantile(alpha / 2.0);
    require(static_cast<double>(n) > (gamma4 - 1.0) * z * z,
            "confidence_interval: need n > (gamma4-1) z^2");
    const double half = z * std::sqrt((gamma4 - 1.0) / static_cast<double>(n));
    ConfidenceInterval ci;
    ci.lo = est.value / (1.0 + half);
    ci.hi = est.value / (1.0 - half);
    ci.alpha = alpha;
    return ci;
}

/// Kurtosis estimate from first differences: E(eps_i - eps_{i-1})^4 equals
/// 2 mu4 + 6 sigma^4 when the trend is smooth, so
///   mu4_hat = max{ (mean (dy)^4 - 6 sigma_hat^4) / 2, sigma_hat^4 },
/// and the returned gamma4_hat = mu4_hat / sigma_hat^4 is clamped to
/// 1 + 1e-9 to respect the standing gamma4 > 1 assumption.
inline double estimate_gamma4(const Sample1D& sample, double sigma2_hat) {
    const std::size_t n = sample.n();
    require(n >= 3, "estimate_gamma4: need n >= 3");
    require(sigma2_hat > 0.0, "estimate_gamma4: sigma2_hat must be positive");
    const auto& y = sample.y();
    double acc = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double diff = y[i] - y[i - 1];
        acc += diff * diff * diff * diff;
    }
    const double mean4 = acc / static_cast<double>(n - 1);
    const double s4 = sigma2_hat * sigma2_hat;
    const double mu4 = std::max((mean4 - 6.0 * s4) / 2.0, s4);
    return std::max(mu4 / s4, 1.0 + 1e-9);
}

/// Bandwidth rules m_s = n^{1/2}, m_t = n^{1/3}, integerized by flooring the
/// pow() value. The cube-root rule is deliberately pow-based:
/// floor(pow(1000, 1./3)) == 9 in double precision, and the simulation
/// defaults depend on that value.
inline std::size_t sqrt_bandwidth(std::size_t n, std::size_t lo) {
    auto b = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), 0.5)));
    return std::min(std::max(b, lo), n - 1);
}

inline std::size_t cbrt_bandwidth(std::size_t n, std::size_t lo) {
    auto b = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), 1.0 / 3.0)));
    return std::min(std::max(b, lo), n - 1);
}

}  // namespace varfit
