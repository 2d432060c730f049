#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "helpers.hpp"
#include "varfit/varfit.hpp"

using namespace varfit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("regression coefficients b_k") {
    const TWCoefficients c = tw_coefficients(100, 10);
    REQUIRE(c.b.size() == 12);
    REQUIRE(c.b[0] == 0.0);
    REQUIRE(c.b[11] == 0.0);
    // sum_k w_k b_k = 1 because the weighted d-deviations sum to zero
    const TWDesign ds = tw_design(100, 10);
    double acc = 0.0;
    for (std::size_t k = 1; k <= 10; ++k) acc += ds.w[k - 1] * c.b[k];
    REQUIRE_THAT(acc, WithinRel(1.0, 1e-12));
}

TEST_CASE("banded matrix reproduces the dense reference entry by entry") {
    std::mt19937_64 eng(31);
    for (auto [n, m] : std::vector<std::pair<std::size_t, std::size_t>>{
             {5, 2}, {12, 3}, {30, 5}, {40, 13}, {25, 18}, {9, 8}}) {
        const BandedSymmetric d = build_tw_matrix(n, m);
        const testref::Dense ref = testref::dense_tw(n, m);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                REQUIRE_THAT(d.entry(i, j), WithinAbs(ref[i][j], 1e-12));
        if (n >= 2 * m + 1) {
            // the published entry table applies verbatim away from the
            // overlap regime
            const testref::Dense printed = testref::dense_tw_printed(n, m);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    REQUIRE_THAT(d.entry(i, j), WithinAbs(printed[i][j], 1e-12));
        }
    }
    for (auto [n, L] : std::vector<std::pair<std::size_t, std::size_t>>{
             {6, 3}, {20, 10}, {30, 5}, {47, 13}}) {
        const BandedSymmetric msm = build_ms_matrix(n, L);
        const testref::Dense ref = testref::dense_ms(n, L);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                REQUIRE_THAT(msm.entry(i, j), WithinAbs(ref[i][j], 1e-12));
    }
}

TEST_CASE("matrix symmetry and band sparsity") {
    const BandedSymmetric d = build_tw_matrix(17, 6);
    const BandedSymmetric msm = build_ms_matrix(17, 6);
    for (std::size_t i = 0; i < 17; ++i) {
        for (std::size_t j = 0; j < 17; ++j) {
            REQUIRE(d.entry(i, j) == d.entry(j, i));
            REQUIRE(msm.entry(i, j) == msm.entry(j, i));
            const std::size_t off = i > j ? i - j : j - i;
            if (off > 6) {
                REQUIRE(d.entry(i, j) == 0.0);
                REQUIRE(msm.entry(i, j) == 0.0);
            }
        }
    }
}

TEST_CASE("trace identities hold exactly") {
    for (auto [n, m] : std::vector<std::pair<std::size_t, std::size_t>>{
             {10, 2}, {50, 7}, {200, 14}, {1000, 31}, {10000, 100}, {64, 60}}) {
        const BandedSymmetric d = build_tw_matrix(n, m);
        const double npairs = static_cast<double>(n) * m - m * (m + 1.0) / 2.0;
        REQUIRE_THAT(d.trace(), WithinRel(2.0 * npairs, 1e-9));
    }
    for (auto [n, L] : std::vector<std::pair<std::size_t, std::size_t>>{
             {10, 3}, {200, 14}, {1000, 31}, {10000, 100}}) {
        const BandedSymmetric msm = build_ms_matrix(n, L);
        REQUIRE_THAT(msm.trace(), WithinRel(2.0 * static_cast<double>(n - L), 1e-9));
    }
    // documented value: tr(M) = 372 at (n, L) = (200, 14)
    REQUIRE_THAT(build_ms_matrix(200, 14).trace(), WithinRel(372.0, 1e-12));
}

TEST_CASE("banded traces match dense computation") {
    for (auto [n, m] : std::vector<std::pair<std::size_t, std::size_t>>{{30, 4}, {41, 17}}) {
        const BandedSymmetric d = build_tw_matrix(n, m);
        const testref::Dense ref = testref::dense_tw(n, m);
        const Traces t = traces(d);
        REQUIRE_THAT(t.tr, WithinRel(testref::dense_trace(ref), 1e-12));
        REQUIRE_THAT(t.tr_sq, WithinRel(testref::dense_trace_square(ref), 1e-12));
        double dsq = 0.0;
        for (std::size_t i = 0; i < n; ++i) dsq += ref[i][i] * ref[i][i];
        REQUIRE_THAT(t.tr_diag_sq, WithinRel(dsq, 1e-12));
    }
    const BandedSymmetric msm = build_ms_matrix(26, 9);
    const testref::Dense ref = testref::dense_ms(26, 9);
    REQUIRE_THAT(msm.trace_square(), WithinRel(testref::dense_trace_square(ref), 1e-12));
}

TEST_CASE("banded matvec matches dense") {
    std::mt19937_64 eng(77);
    const BandedSymmetric msm = build_ms_matrix(33, 8);
    const testref::Dense ref = testref::dense_ms(33, 8);
    const auto y = testref::random_vector(eng, 33);
    std::vector<double> out(33);
    msm.matvec(y, out);
    const auto dense_out = testref::dense_matvec(ref, y);
    for (std::size_t i = 0; i < 33; ++i) REQUIRE_THAT(out[i], WithinAbs(dense_out[i], 1e-12));
}

TEST_CASE("quadratic form equals the regression estimators") {
    std::mt19937_64 eng(404);
    SECTION("lag regression vs y'Dy/tr(D), 100 random instances") {
        for (int rep = 0; rep < 100; ++rep) {
            const std::size_t n = 6 + static_cast<std::size_t>(eng() % 195);
            const std::size_t m = 2 + static_cast<std::size_t>(eng() % (n - 2));
            const auto y = testref::random_vector(eng, n);
            const double reg = lag_regression(Sample1D::equally_spaced(y), m).raw_value;
            const double qf = quad_form(build_tw_matrix(n, m), y);
            REQUIRE(testref::rel_diff(reg, qf) < 1e-10);
        }
    }
    SECTION("fixed-window estimator vs y'My/tr(M), 100 random instances") {
        for (int rep = 0; rep < 100; ++rep) {
            const std::size_t n = 8 + static_cast<std::size_t>(eng() % 193);
            const std::size_t L = 3 + static_cast<std::size_t>(eng() % (n / 2 - 2));
            const auto y = testref::random_vector(eng, n);
            const double reg = fixed_window(Sample1D::equally_spaced(y), L).raw_value;
            const double qf = quad_form(build_ms_matrix(n, L), y);
            REQUIRE(testref::rel_diff(reg, qf) < 1e-10);
        }
    }
    SECTION("documented small cases") {
        REQUIRE_THAT(quad_form(build_tw_matrix(5, 2), std::vector<double>{0, 1, 0, 1, 0}),
                     WithinRel(2.0 / 3.0, 1e-12));
        REQUIRE_THAT(
            quad_form(build_ms_matrix(6, 3), std::vector<double>{0, 1, 0, 1, 0, 1}),
            WithinRel(2.0, 1e-12));
    }
}

TEST_CASE("quad_form plumbing") {
    const BandedSymmetric eye(2, 1, {1.0, 1.0}, {0.0}, 2);
    REQUIRE_THAT(quad_form(eye, std::vector<double>{1.0, 1.0}), WithinAbs(1.0, 1e-15));
    REQUIRE(quad_form(build_tw_matrix(8, 3), std::vector<double>(8, 0.0)) == 0.0);
    REQUIRE_THROWS_AS(quad_form(eye, std::vector<double>{1.0}), precondition_error);
    const BandedSymmetric zero(3, 1, {0.0, 0.0, 0.0}, {0.0}, 3);
    REQUIRE_THROWS_AS(quad_form(zero, std::vector<double>{1, 2, 3}), precondition_error);
    Traces t = traces(zero);
    REQUIRE(t.tr == 0.0);
    REQUIRE(t.tr_sq == 0.0);
    REQUIRE(t.tr_diag_sq == 0.0);
}

TEST_CASE("exact moments against exhaustive enumeration") {
    // Two-point laws give exact expectations over all 2^n noise vectors,
    // covering skewed (gamma3 != 0) and sub-Gaussian (gamma4 < 3) cases.
    const std::size_t n = 10;
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = 5.0 * static_cast<double>(i + 1) / n;

    for (const auto& tp : {testref::TwoPoint::make(0.5, -1.0, 1.0),
                           testref::TwoPoint::make(0.2, 0.0, 1.0),
                           testref::TwoPoint::make(0.3, -2.0, 0.5)}) {
        // the two-point kurtosis can touch 1; nudge the law when degenerate
        const NoiseMoments noise(tp.sigma2(), tp.gamma3(),
                                 std::max(tp.gamma4(), 1.0 + 1e-12));
        for (bool tw : {true, false}) {
            const BandedSymmetric a = tw ? build_tw_matrix(n, 3) : build_ms_matrix(n, 4);
            const testref::Dense ref =
                tw ? testref::dense_tw(n, 3) : testref::dense_ms(n, 4);
            const ExactMoments got = exact_mse(a, g, noise);
            const testref::EnumeratedMoments want = testref::enumerate_mse(ref, g, tp);
            REQUIRE_THAT(got.mse, WithinRel(want.mse, 1e-10));
            REQUIRE_THAT(got.bias, WithinAbs(want.bias, 1e-12));
            REQUIRE_THAT(got.mse, WithinRel(got.bias * got.bias + got.variance, 1e-12));
        }
    }
}

TEST_CASE("exact moments analytic special cases") {
    const BandedSymmetric a = build_tw_matrix(60, 6);
    const std::vector<double> zero(60, 0.0);
    const NoiseMoments normal = NoiseMoments::normal(1.0);
    const ExactMoments m0 = exact_mse(a, zero, normal);
    REQUIRE(m0.bias == 0.0);
    REQUIRE_THAT(m0.mse, WithinRel(2.0 * a.trace_square() / (a.trace() * a.trace()), 1e-12));

    // flipping the sign of g only exercises even terms when gamma3 = 0
    std::mt19937_64 eng(9);
    const auto g = testref::random_vector(eng, 60);
    std::vector<double> neg(60);
    for (std::size_t i = 0; i < 60; ++i) neg[i] = -g[i];
    const ExactMoments plus = exact_mse(a, g, normal);
    const ExactMoments minus = exact_mse(a, neg, normal);
    REQUIRE_THAT(plus.mse, WithinRel(minus.mse, 1e-12));
}

TEST_CASE("quadratic form is unbiased up to the trend term") {
    // E[y'Ay/tr(A)] = sigma2 + g'Ag/tr(A) for y = g + eps
    const std::size_t n = 60, reps = 4000;
    const double sigma2 = 0.49;
    const BandedSymmetric a = build_tw_matrix(n, 6);
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i + 1) / n;
        g[i] = 5.0 * x * (1.0 - x);
    }
    const double expected = sigma2 + a.quad_raw(g) / a.trace();

    std::vector<double> vals(reps);
    std::vector<double> y(n);
    for (std::size_t r = 0; r < reps; ++r) {
        const auto yr = generate_sample(g, std::sqrt(sigma2), derive_stream_seed(88, r));
        vals[r] = quad_form(a, yr);
    }
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= reps;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= reps;
    const double se = std::sqrt(var / reps);
    REQUIRE(std::abs(mean - expected) < 3.0 * se);
}

TEST_CASE("chi-square degrees of freedom") {
    const BandedSymmetric eye(2, 1, {1.0, 1.0}, {0.0}, 2);
    REQUIRE_THAT(chi_square_df(eye), WithinAbs(2.0, 1e-15));

    // golden value, frozen from a dense-matrix computation
    REQUIRE_THAT(chi_square_df(build_tw_matrix(1000, 32)),
                 WithinRel(962.4491837578428, 1e-9));

    // nu grows with n at fixed m
    const double nu100 = chi_square_df(build_tw_matrix(100, 10));
    const double nu200 = chi_square_df(build_tw_matrix(200, 10));
    const double nu400 = chi_square_df(build_tw_matrix(400, 10));
    REQUIRE(nu100 < nu200);
    REQUIRE(nu200 < nu400);
    REQUIRE(nu400 <= 2.0 * 400.0);
}

TEST_CASE("builder preconditions") {
    REQUIRE_THROWS_AS(build_tw_matrix(10, 1), precondition_error);
    REQUIRE_THROWS_AS(build_tw_matrix(10, 10), precondition_error);
    REQUIRE_THROWS_AS(build_ms_matrix(10, 2), precondition_error);
    REQUIRE_THROWS_AS(build_ms_matrix(10, 6), precondition_error);  // 2L > n
    REQUIRE_THROWS_AS(exact_mse(build_tw_matrix(10, 3), std::vector<double>(9, 0.0),
                                NoiseMoments::normal(1.0)),
                      precondition_error);
}
