#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>

#include "varfit/quadratic_forms.hpp"
#include "varfit/types.hpp"

namespace varfit {

enum class MeanId { g1, g2, g3, custom };

inline const char* to_string(MeanId id) {
    switch (id) {
        case MeanId::g1: return "g1";
        case MeanId::g2: return "g2";
        case MeanId::g3: return "g3";
        case MeanId::custom: return "custom";
    }
    return "?";
}

inline MeanId mean_id_from_string(const std::string& s) {
    if (s == "g1") return MeanId::g1;
    if (s == "g2") return MeanId::g2;
    if (s == "g3") return MeanId::g3;
    throw precondition_error("unknown mean function: " + s);
}

/// Trend function on [0, 1]. Built-ins:
///   g1(x) = 5x,  g2(x) = 5x(1-x),  g3(x) = 5 sin(2 pi x),
/// each with its analytic derivative.
class MeanFunction {
  public:
    using Fn = std::function<double(double)>;

    MeanFunction(MeanId id, Fn fn, Fn derivative = nullptr)
        : id_(id), fn_(std::move(fn)), deriv_(std::move(derivative)) {}

    static MeanFunction get(MeanId id) {
        switch (id) {
            case MeanId::g1:
                return {MeanId::g1, [](double x) { return 5.0 * x; },
                        [](double) { return 5.0; }};
            case MeanId::g2:
                return {MeanId::g2, [](double x) { return 5.0 * x * (1.0 - x); },
                        [](double x) { return 5.0 - 10.0 * x; }};
            case MeanId::g3:
                return {MeanId::g3,
                        [](double x) { return 5.0 * std::sin(2.0 * M_PI * x); },
                        [](double x) { return 10.0 * M_PI * std::cos(2.0 * M_PI * x); }};
            case MeanId::custom: break;
        }
        throw precondition_error("MeanFunction::get: no built-in for custom");
    }

    static MeanFunction custom(Fn fn, Fn derivative = nullptr) {
        return {MeanId::custom, std::move(fn), std::move(derivative)};
    }

    MeanId id() const { return id_; }
    double operator()(double x) const { return fn_(x); }
    bool has_derivative() const { return static_cast<bool>(deriv_); }

    /// Analytic derivative when available, otherwise a central difference
    /// (clamped to [0, 1] at the boundary).
    double derivative(double x) const {
        if (deriv_) return deriv_(x);
        const double h = 1e-4;
        const double lo = std::max(0.0, x - h);
        const double hi = std::min(1.0, x + h);
        return (fn_(hi) - fn_(lo)) / (hi - lo);
    }

  private:
    MeanId id_;
    Fn fn_;
    Fn deriv_;
};

struct TrendProfile {
    double J = 0.0;  // integral of g'(x)^2 over [0,1], halved
};

/// J = (1/2) int_0^1 g'(x)^2 dx by composite Simpson on 10^4 intervals.
inline TrendProfile trend_J(const MeanFunction& g) {
    const std::size_t intervals = 10000;  // even
    const double h = 1.0 / static_cast<double>(intervals);
    const auto f = [&](double x) {
        const double gp = g.derivative(x);
        if (!std::isfinite(gp)) throw data_error("trend_J: non-finite derivative");
        return gp * gp;
    };
    double acc = f(0.0) + f(1.0);
    for (std::size_t i = 1; i < intervals; ++i)
        acc += f(static_cast<double>(i) * h) * (i % 2 ? 4.0 : 2.0);
    return {acc * h / 6.0};  // Simpson /3 times the final /2
}

/// Lag statistic k overshoots the variance by J d_k with d_k = k^2/n^2.
/// The expansion assumes k = o(n); when k > n^{3/4} the optional flag is set.
inline double expected_lag_bias(double J, std::size_t k, std::size_t n,
                                bool* large_k_warning = nullptr) {
    const double kk = static_cast<double>(k);
    const double nn = static_cast<double>(n);
    if (large_k_warning) *large_k_warning = kk > std::pow(nn, 0.75);
    return J * kk * kk / (nn * nn);
}

/// Leading term of Cov(s_b, s_k), b < k:
///   (2n - 2k - b)(gamma4 - 1) sigma^4 / {2 (n-b)(n-k)}.
inline double asymptotic_cov_lag(std::size_t b, std::size_t k, std::size_t n,
                                 const NoiseMoments& noise) {
    require(b >= 1 && b < k && k < n, "asymptotic_cov_lag: need 1 <= b < k < n");
    const double nn = static_cast<double>(n);
    const double bb = static_cast<double>(b);
    const double kk = static_cast<double>(k);
    return (2.0 * nn - 2.0 * kk - bb) * (noise.gamma4() - 1.0) * noise.sigma2() *
           noise.sigma2() / (2.0 * (nn - bb) * (nn - kk));
}

/// Two-term asymptotic MSE of the fixed-window estimator:
///   var(eps^2)/n + 73 L var(eps^2)/(70 n^2) + 9 sigma^4/(L n).
inline double asymptotic_mse_ms(std::size_t n, std::size_t L, const NoiseMoments& noise) {
    require(L >= 3, "asymptotic_mse_ms: need L >= 3");
    const double nn = static_cast<double>(n);
    const double LL = static_cast<double>(L);
    const double v = noise.var_eps2();
    const double s4 = noise.sigma2() * noise.sigma2();
    return v / nn + 73.0 * LL * v / (70.0 * nn * nn) + 9.0 * s4 / (LL * nn);
}

/// L_opt = sqrt(630 n sigma^4 / (73 var(eps^2))), rounded half-up and clamped
/// to [3, n-1].
inline std::size_t optimal_L(std::size_t n, const NoiseMoments& noise) {
    require(n >= 10, "optimal_L: need n >= 10");
    const double s4 = noise.sigma2() * noise.sigma2();
    const double raw =
        std::sqrt(630.0 * static_cast<double>(n) * s4 / (73.0 * noise.var_eps2()));
    const double rounded = std::floor(raw + 0.5);
    const double clamped = std::min(std::max(rounded, 3.0), static_cast<double>(n - 1));
    return static_cast<std::size_t>(clamped);
}

struct OptimalMseComparison {
    double mse_tw = 0.0;              // var(eps^2)/n + sqrt(567)/28 * ...
    double mse_ms = 0.0;              // var(eps^2)/n + sqrt(45990)/35 * ...
    double ratio_second_order = 0.0;  // (sqrt(45990)/35) / (sqrt(567)/28)
};

/// Optimal-bandwidth MSE expansions of the two estimators. Both share the
/// first-order term var(eps^2)/n; the second-order coefficients differ by the
/// constant factor 4 sqrt(730)/15 = 7.2049...
inline OptimalMseComparison optimal_mse_comparison(std::size_t n, const NoiseMoments& noise) {
    require(n >= 30, "optimal_mse_comparison: need n >= 30");
    const double nn = static_cast<double>(n);
    const double v = noise.var_eps2();
    const double s4 = noise.sigma2() * noise.sigma2();
    const double scale = std::sqrt(s4 * v) * std::pow(nn, -1.5);
    const double c_tw = std::sqrt(567.0) / 28.0;
    const double c_ms = std::sqrt(45990.0) / 35.0;
    OptimalMseComparison out;
    out.mse_tw = v / nn + c_tw * scale;
    out.mse_ms = v / nn + c_ms * scale;
    out.ratio_second_order = c_ms / c_tw;
    return out;
}

/// Exact coefficient sums and matrix traces against their asymptotic
/// predictions. Deviations for the b_k sums are scaled by m, trace
/// deviations are relative.
struct IdentityReport {
    std::size_t n = 0;
    std::size_t m = 0;
    bool warn_large_m = false;  // set when m > n^{2/3}

    double b_sum = 0.0;
    double b_sum_pred = 0.0;  // m - 5 m^2 / (16 n)
    double b_sum_dev = 0.0;   // |b_sum - pred| / m

    double b2_sum = 0.0;
    double b2_sum_pred = 0.0;  // 9 m / 4
    double b2_sum_dev = 0.0;   // |b2_sum - pred| / m

    double tr_d = 0.0;
    double tr_d_expected = 0.0;  // 2N
    double tr_d_dev = 0.0;       // relative

    bool ms_checked = false;  // false when L=m violates 3 <= L, 2L <= n
    double tr_m = 0.0;
    double tr_m_expected = 0.0;  // 2(n-L)
    double tr_m_dev = 0.0;
    double tr_m2 = 0.0;
    double tr_m2_pred = 0.0;  // 4n - 134 L / 35 + 18 n / L
    double tr_m2_dev = 0.0;
    double tr_diag_m2 = 0.0;
    double tr_diag_m2_pred = 0.0;  // 4n - 134 L / 35
    double tr_diag_m2_dev = 0.0;
};

inline IdentityReport check_identities(std::size_t n, std::size_t m) {
    require(m >= 2 && m < n, "check_identities: need 2 <= m < n");
    IdentityReport r;
    r.n = n;
    r.m = m;
    const double nn = static_cast<double>(n);
    const double mm = static_cast<double>(m);
    r.warn_large_m = mm > std::pow(nn, 2.0 / 3.0);

    const TWCoefficients c = tw_coefficients(n, m);
    for (std::size_t k = 1; k <= m; ++k) r.b_sum += c.b[k];
    for (std::size_t k = 1; k <= m; ++k) r.b2_sum += c.b[k] * c.b[k];
    r.b_sum_pred = mm - 5.0 * mm * mm / (16.0 * nn);
    r.b2_sum_pred = 2.25 * mm;
    r.b_sum_dev = std::abs(r.b_sum - r.b_sum_pred) / mm;
    r.b2_sum_dev = std::abs(r.b2_sum - r.b2_sum_pred) / mm;

    const BandedSymmetric d = build_tw_matrix(n, m);
    r.tr_d = d.trace();
    r.tr_d_expected = 2.0 * (nn * mm - mm * (mm + 1.0) / 2.0);
    r.tr_d_dev = std::abs(r.tr_d - r.tr_d_expected) / r.tr_d_expected;

    if (m >= 3 && 2 * m <= n) {
        r.ms_checked = true;
        const BandedSymmetric msm = build_ms_matrix(n, m);
        const Traces t = traces(msm);
        r.tr_m = t.tr;
        r.tr_m_expected = 2.0 * (nn - mm);
        r.tr_m_dev = std::abs(r.tr_m - r.tr_m_expected) / r.tr_m_expected;
        r.tr_m2 = t.tr_sq;
        r.tr_m2_pred = 4.0 * nn - 134.0 * mm / 35.0 + 18.0 * nn / mm;
        r.tr_m2_dev = std::abs(r.tr_m2 - r.tr_m2_pred) / r.tr_m2;
        r.tr_diag_m2 = t.tr_diag_sq;
        r.tr_diag_m2_pred = 4.0 * nn - 134.0 * mm / 35.0;
        r.tr_diag_m2_dev = std::abs(r.tr_diag_m2 - r.tr_diag_m2_pred) / r.tr_diag_m2;
    }
    return r;
}

}  // namespace varfit
