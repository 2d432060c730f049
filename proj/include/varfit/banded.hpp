#pragma once

#include <cstddef>
#include <cstdio>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "varfit/types.hpp"

namespace varfit {

/// Symmetric banded matrix with an explicit diagonal and one value per band
/// offset. Off-diagonal entries may stop applying after a row cutoff:
/// entry(i, i+k) = band[k-1] for 0-based i < offdiag_rows (else 0), which
/// reproduces matrices whose off-diagonals vanish near one boundary in
/// O(n + bandwidth) memory. Immutable after construction.
class BandedSymmetric {
  public:
    BandedSymmetric(std::size_t n, std::size_t bandwidth, std::vector<double> diag,
                    std::vector<double> band, std::size_t offdiag_rows)
        : n_(n),
          bw_(bandwidth),
          diag_(std::move(diag)),
          band_(std::move(band)),
          offdiag_rows_(std::min(offdiag_rows, n)) {
        require(diag_.size() == n_, "BandedSymmetric: diagonal size mismatch");
        require(band_.size() == bw_, "BandedSymmetric: band size mismatch");
        require(bw_ < n_, "BandedSymmetric: bandwidth must be below n");
    }

    std::size_t n() const { return n_; }
    std::size_t bandwidth() const { return bw_; }
    std::size_t offdiag_rows() const { return offdiag_rows_; }

    /// Entry (i, j), 0-based, symmetric.
    double entry(std::size_t i, std::size_t j) const {
        if (i == j) return diag_[i];
        const std::size_t lo = std::min(i, j);
        const std::size_t k = std::max(i, j) - lo;
        if (k > bw_ || lo >= offdiag_rows_) return 0.0;
        return band_[k - 1];
    }

    double trace() const {
        double t = 0.0;
        for (double v : diag_) t += v;
        return t;
    }

    /// tr(A^2) = sum_ij a_ij^2 for symmetric A.
    double trace_square() const {
        double t = trace_diag_square();
        for (std::size_t k = 1; k <= bw_; ++k) {
            const double cnt = static_cast<double>(applicable_rows(k));
            t += 2.0 * cnt * band_[k - 1] * band_[k - 1];
        }
        return t;
    }

    double trace_diag_square() const {
        double t = 0.0;
        for (double v : diag_) t += v * v;
        return t;
    }

    /// y^T A y without materializing the dense matrix.
    double quad_raw(std::span<const double> y) const {
        require(y.size() == n_, "quad_raw: dimension mismatch");
        double acc = 0.0;
        for (std::size_t i = 0; i < n_; ++i) acc += diag_[i] * y[i] * y[i];
        for (std::size_t k = 1; k <= bw_; ++k) {
            const std::size_t rows = applicable_rows(k);
            double cross = 0.0;
            for (std::size_t i = 0; i < rows; ++i) cross += y[i] * y[i + k];
            acc += 2.0 * band_[k - 1] * cross;
        }
        return acc;
    }

    /// out = A y.
    void matvec(std::span<const double> y, std::span<double> out) const {
        require(y.size() == n_ && out.size() == n_, "matvec: dimension mismatch");
        for (std::size_t i = 0; i < n_; ++i) out[i] = diag_[i] * y[i];
        for (std::size_t k = 1; k <= bw_; ++k) {
            const std::size_t rows = applicable_rows(k);
            const double v = band_[k - 1];
            for (std::size_t i = 0; i < rows; ++i) {
                out[i] += v * y[i + k];
                out[i + k] += v * y[i];
            }
        }
    }

    /// CSV of nonzero entries as 1-based (i, j, value) triples, 17 significant
    /// digits, row-major upper triangle mirrored explicitly.
    void dump_nonzero(std::ostream& os) const {
        os << "i,j,value\n";
        char buf[64];
        const auto emit = [&](std::size_t i, std::size_t j, double v) {
            if (v == 0.0) return;
            std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g\n", i + 1, j + 1, v);
            os << buf;
        };
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t from = i >= bw_ ? i - bw_ : 0;
            for (std::size_t j = from; j <= std::min(i + bw_, n_ - 1); ++j)
                emit(i, j, entry(i, j));
        }
    }

  private:
    std::size_t applicable_rows(std::size_t k) const {
        return std::min(n_ - k, offdiag_rows_);
    }

    std::size_t n_;
    std::size_t bw_;
    std::vector<double> diag_;
    std::vector<double> band_;
    std::size_t offdiag_rows_;
};

struct Traces {
    double tr = 0.0;
    double tr_sq = 0.0;       // tr(A^2)
    double tr_diag_sq = 0.0;  // tr[diag(A)^2]
};

inline Traces traces(const BandedSymmetric& a) {
    return {a.trace(), a.trace_square(), a.trace_diag_square()};
}

/// Normalized quadratic form y^T A y / tr(A).
inline double quad_form(const BandedSymmetric& a, std::span<const double> y) {
    require(y.size() == a.n(), "quad_form: dimension mismatch");
    const double tr = a.trace();
    require(tr != 0.0, "quad_form: zero trace");
    return a.quad_raw(y) / tr;
}

}  // namespace varfit
