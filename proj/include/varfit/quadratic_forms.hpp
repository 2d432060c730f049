#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "varfit/banded.hpp"
#include "varfit/estimators.hpp"
#include "varfit/types.hpp"

namespace varfit {

/// b_k = 1 - dbar (d_k - dbar) / sum_j w_j (d_j - dbar)^2, with b_0 = b_{m+1} = 0.
struct TWCoefficients {
    std::size_t m = 0;
    std::vector<double> b;  // b[0..m+1]
};

inline TWCoefficients tw_coefficients(std::size_t n, std::size_t m) {
    const TWDesign ds = tw_design(n, m);
    TWCoefficients c;
    c.m = m;
    c.b.assign(m + 2, 0.0);
    for (std::size_t k = 1; k <= m; ++k)
        c.b[k] = 1.0 - ds.dbar * (ds.d[k - 1] - ds.dbar) / ds.var_d;
    return c;
}

struct MSCoefficients {
    std::size_t L = 0;
    std::vector<double> a;  // a[0..L], a_0 = 0, sums to 1
};

inline MSCoefficients ms_coefficients(std::size_t L) {
    return {L, fixed_window_weights(L)};
}

/// Matrix of the lag-regression estimator: sigma2_hat = y^T D y / tr(D).
/// Diagonal entry i (1-based) is sum_{k<=min(i-1,m)} b_k + sum_{k<=min(n-i,m)} b_k,
/// off-diagonals are -b_{|i-j|} within the band. tr(D) = 2N holds exactly.
inline BandedSymmetric build_tw_matrix(std::size_t n, std::size_t m) {
    require(m >= 2 && m < n, "build_tw_matrix: need 2 <= m < n");
    const TWCoefficients c = tw_coefficients(n, m);

    std::vector<double> prefix(m + 1, 0.0);  // prefix[j] = sum_{k=1}^{j} b_k
    for (std::size_t k = 1; k <= m; ++k) prefix[k] = prefix[k - 1] + c.b[k];

    std::vector<double> diag(n);
    for (std::size_t i = 1; i <= n; ++i)
        diag[i - 1] = prefix[std::min(i - 1, m)] + prefix[std::min(n - i, m)];

    std::vector<double> band(m);
    for (std::size_t k = 1; k <= m; ++k) band[k - 1] = -c.b[k];

    BandedSymmetric d(n, m, std::move(diag), std::move(band), n);
#ifndef NDEBUG
    const double nn = static_cast<double>(n);
    const double two_n_pairs =
        2.0 * (nn * static_cast<double>(m) -
               static_cast<double>(m) * static_cast<double>(m + 1) / 2.0);
    assert(std::abs(d.trace() - two_n_pairs) <= 1e-9 * two_n_pairs);
#endif
    return d;
}

/// Matrix of the fixed-window estimator: sigma2_hat = y^T M y / tr(M).
/// Three-regime diagonal (1-based):
///   i <= L:        1 + sum_{k=0}^{i-1} a_k
///   L < i <= n-L:  2
///   i > n-L:       sum_{k=i+L-n}^{L} a_k
/// Off-diagonals -a_{|i-j|} apply only while min(i, j) <= n-L.
/// tr(M) = 2(n-L) holds exactly.
inline BandedSymmetric build_ms_matrix(std::size_t n, std::size_t L) {
    require(L >= 3, "build_ms_matrix: need L >= 3");
    require(2 * L <= n, "build_ms_matrix: need 2L <= n");
    const std::vector<double> a = fixed_window_weights(L);

    std::vector<double> prefix(L + 1, 0.0);  // prefix[j] = sum_{k=1}^{j} a_k
    for (std::size_t k = 1; k <= L; ++k) prefix[k] = prefix[k - 1] + a[k];
    std::vector<double> suffix(L + 2, 0.0);  // suffix[j] = sum_{k=j}^{L} a_k
    for (std::size_t k = L; k >= 1; --k) suffix[k] = suffix[k + 1] + a[k];

    std::vector<double> diag(n);
    for (std::size_t i = 1; i <= n; ++i) {
        if (i <= L)
            diag[i - 1] = 1.0 + prefix[i - 1];
        else if (i <= n - L)
            diag[i - 1] = 2.0;
        else
            diag[i - 1] = suffix[i + L - n];
    }

    std::vector<double> band(L);
    for (std::size_t k = 1; k <= L; ++k) band[k - 1] = -a[k];

    BandedSymmetric msm(n, L, std::move(diag), std::move(band), n - L);
#ifndef NDEBUG
    const double expected = 2.0 * static_cast<double>(n - L);
    assert(std::abs(msm.trace() - expected) <= 1e-9 * expected);
#endif
    return msm;
}

struct ExactMoments {
    double bias = 0.0;      // g^T A g / tr(A)
    double variance = 0.0;
    double mse = 0.0;       // bias^2 + variance
};

/// Exact finite-sample moments of y^T A y / tr(A) under y = g + eps with iid
/// noise. The variance collects the four moment terms
///   [4 s2 g'A^2g + 4 g3 s^3 g'A diag(A) 1 + s4 (g4-3) tr(diag^2) + 2 s4 tr(A^2)] / tr(A)^2.
inline ExactMoments exact_mse(const BandedSymmetric& a, std::span<const double> g,
                              const NoiseMoments& noise) {
    require(g.size() == a.n(), "exact_mse: mean vector dimension mismatch");
    const double tr = a.trace();
    require(tr != 0.0, "exact_mse: zero trace");

    std::vector<double> ag(a.n());
    a.matvec(g, ag);
    double g_ag = 0.0;     // g^T A g
    double ag_ag = 0.0;    // g^T A^2 g
    double ag_diag = 0.0;  // g^T A diag(A) 1
    for (std::size_t i = 0; i < a.n(); ++i) {
        g_ag += g[i] * ag[i];
        ag_ag += ag[i] * ag[i];
        ag_diag += ag[i] * a.entry(i, i);
    }

    const double s2 = noise.sigma2();
    const double s3 = s2 * std::sqrt(s2);
    const double s4 = s2 * s2;
    const double var = (4.0 * s2 * ag_ag + 4.0 * ag_diag * s3 * noise.gamma3() +
                        s4 * a.trace_diag_square() * (noise.gamma4() - 3.0) +
                        2.0 * s4 * a.trace_square()) /
                       (tr * tr);

    ExactMoments out;
    out.bias = g_ag / tr;
    out.variance = var;
    out.mse = out.bias * out.bias + var;
    return out;
}

/// Degrees of freedom of the scaled chi-square approximation:
/// nu = tr(A)^2 / tr(A^2).
inline double chi_square_df(const BandedSymmetric& a) {
    const double tr2 = a.trace_square();
    require(tr2 > 0.0, "chi_square_df: degenerate matrix");
    const double tr = a.trace();
    return tr * tr / tr2;
}

}  // namespace varfit
