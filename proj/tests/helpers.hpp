#pragma once

// Test-only reference implementations, kept independent of the banded-storage
// code paths they check: dense matrices built straight from the published
// entry tables, brute-force regressions from raw sums, and an exhaustive
// expectation oracle over two-point noise.

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "varfit/varfit.hpp"

namespace testref {

using Dense = std::vector<std::vector<double>>;

inline Dense zeros(std::size_t n) { return Dense(n, std::vector<double>(n, 0.0)); }

// Accumulates sum_k b_k sum_{i=1}^{n-k} (y_{i+k} - y_i)^2 entry by entry.
inline Dense dense_tw(std::size_t n, std::size_t m) {
    const varfit::TWCoefficients c = varfit::tw_coefficients(n, m);
    Dense d = zeros(n);
    for (std::size_t k = 1; k <= m; ++k) {
        for (std::size_t i = 0; i + k < n; ++i) {
            d[i][i] += c.b[k];
            d[i + k][i + k] += c.b[k];
            d[i][i + k] -= c.b[k];
            d[i + k][i] -= c.b[k];
        }
    }
    return d;
}

// The published entry table (interior regime n >= 2m+1): diagonal
// sum_{k=1}^m b_k + sum_{k=0}^{min(i-1, n-i, m)} b_k, off-diagonal -b_{|i-j|}.
inline Dense dense_tw_printed(std::size_t n, std::size_t m) {
    const varfit::TWCoefficients c = varfit::tw_coefficients(n, m);
    double sb = 0.0;
    for (std::size_t k = 1; k <= m; ++k) sb += c.b[k];
    Dense d = zeros(n);
    for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t cap = std::min({i - 1, n - i, m});
        double part = 0.0;
        for (std::size_t k = 0; k <= cap; ++k) part += c.b[k];
        d[i - 1][i - 1] = sb + part;
        for (std::size_t j = 1; j <= n; ++j) {
            const std::size_t off = i > j ? i - j : j - i;
            if (off >= 1 && off <= m) d[i - 1][j - 1] = -c.b[off];
        }
    }
    return d;
}

// The published fixed-window entry table, including the one-sided
// applicability of off-diagonals.
inline Dense dense_ms(std::size_t n, std::size_t L) {
    const std::vector<double> a = varfit::fixed_window_weights(L);
    Dense msm = zeros(n);
    for (std::size_t i = 1; i <= n; ++i) {
        if (i <= L) {
            double acc = 1.0;
            for (std::size_t k = 0; k <= i - 1; ++k) acc += a[k];
            msm[i - 1][i - 1] = acc;
        } else if (i <= n - L) {
            msm[i - 1][i - 1] = 2.0;
        } else {
            double acc = 0.0;
            for (std::size_t k = i; k <= n; ++k) acc += a[k + L - n];
            msm[i - 1][i - 1] = acc;
        }
    }
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            if (j > i && j - i <= L && i <= n - L) msm[i - 1][j - 1] = -a[j - i];
            if (i > j && i - j <= L && j <= n - L) msm[i - 1][j - 1] = -a[i - j];
        }
    }
    return msm;
}

inline double dense_trace(const Dense& a) {
    double t = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) t += a[i][i];
    return t;
}

inline double dense_trace_square(const Dense& a) {
    double t = 0.0;
    for (const auto& row : a)
        for (double v : row) t += v * v;
    return t;
}

inline double dense_quad(const Dense& a, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j) acc += y[i] * a[i][j] * y[j];
    return acc;
}

inline std::vector<double> dense_matvec(const Dense& a, const std::vector<double>& y) {
    std::vector<double> out(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j) out[i] += a[i][j] * y[j];
    return out;
}

// Intercept of the lag regression solved from raw (uncentered) normal
// equations -- an independent route to the library's centered solver.
inline double brute_tw_intercept(const std::vector<double>& y, std::size_t m) {
    const std::size_t n = y.size();
    const double nn = static_cast<double>(n);
    const double npairs = nn * m - m * (m + 1.0) / 2.0;
    double sw = 0.0, swd = 0.0, swdd = 0.0, sws = 0.0, swds = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) {
            const double diff = y[i + k] - y[i];
            acc += diff * diff;
        }
        const double sk = acc / (2.0 * (nn - k));
        const double dk = static_cast<double>(k) * k / (nn * nn);
        const double wk = (nn - k) / npairs;
        sw += wk;
        swd += wk * dk;
        swdd += wk * dk * dk;
        sws += wk * sk;
        swds += wk * dk * sk;
    }
    const double det = sw * swdd - swd * swd;
    return (sws * swdd - swds * swd) / det;
}

// Pairwise regression intercept by literal pair enumeration and raw sums.
inline double brute_pairwise_intercept(const std::vector<std::vector<double>>& pts,
                                       const std::vector<double>& y, double threshold) {
    double cnt = 0.0, sd = 0.0, ss = 0.0, sdd = 0.0, sds = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double dij = 0.0;
            for (std::size_t c = 0; c < pts[i].size(); ++c) {
                const double diff = pts[i][c] - pts[j][c];
                dij += diff * diff;
            }
            if (dij > threshold) continue;
            const double yd = y[i] - y[j];
            const double sij = 0.5 * yd * yd;
            cnt += 1.0;
            sd += dij;
            ss += sij;
            sdd += dij * dij;
            sds += dij * sij;
        }
    }
    const double det = cnt * sdd - sd * sd;
    return (ss * sdd - sds * sd) / det;
}

// Mean-zero two-point noise law with P(eps = hi) = p.
struct TwoPoint {
    double lo = 0.0, hi = 0.0, p = 0.5;

    static TwoPoint make(double p, double a, double b) {
        const double mu = p * b + (1.0 - p) * a;
        return {a - mu, b - mu, p};
    }
    double sigma2() const { return p * hi * hi + (1.0 - p) * lo * lo; }
    double gamma3() const {
        const double s2 = sigma2();
        return (p * hi * hi * hi + (1.0 - p) * lo * lo * lo) / std::pow(s2, 1.5);
    }
    double gamma4() const {
        const double s2 = sigma2();
        return (p * std::pow(hi, 4) + (1.0 - p) * std::pow(lo, 4)) / (s2 * s2);
    }
};

// Exact E[(y'Ay/trA - sigma2)^2] and bias by enumerating all 2^n noise
// vectors; exponential, so keep n <= ~14.
struct EnumeratedMoments {
    double bias = 0.0;
    double mse = 0.0;
};

inline EnumeratedMoments enumerate_mse(const Dense& a, const std::vector<double>& g,
                                       const TwoPoint& noise) {
    const std::size_t n = a.size();
    const double tr = dense_trace(a);
    const double s2 = noise.sigma2();
    EnumeratedMoments out;
    double mean = 0.0;
    std::vector<double> y(n);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double prob = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool up = mask & (std::size_t{1} << i);
            y[i] = g[i] + (up ? noise.hi : noise.lo);
            prob *= up ? noise.p : 1.0 - noise.p;
        }
        const double est = dense_quad(a, y) / tr;
        mean += prob * est;
        out.mse += prob * (est - s2) * (est - s2);
    }
    out.bias = mean - s2;
    return out;
}

inline std::vector<double> random_vector(std::mt19937_64& eng, std::size_t n,
                                         double sd = 1.0) {
    std::normal_distribution<double> z(0.0, sd);
    std::vector<double> y(n);
    for (auto& v : y) v = z(eng);
    return y;
}

inline double rel_diff(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace testref
