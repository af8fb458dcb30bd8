#pragma once

// Tie-corrected Kendall tau-b in O(n log n) and the sine transform to a
// latent correlation estimate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "transell/data.hpp"
#include "transell/errors.hpp"
#include "transell/matrix.hpp"
#include "transell/parallel.hpp"

namespace transell {

namespace detail {

/// Strict inversions (i < j with v[i] > v[j]) counted by bottom-up merge sort.
inline std::int64_t count_inversions(std::vector<double>& v) {
    std::int64_t inv = 0;
    std::vector<double> buf(v.size());
    for (std::size_t width = 1; width < v.size(); width *= 2) {
        for (std::size_t lo = 0; lo + width < v.size(); lo += 2 * width) {
            std::size_t mid = lo + width;
            std::size_t hi = std::min(lo + 2 * width, v.size());
            std::size_t a = lo, b = mid, w = lo;
            while (a < mid && b < hi) {
                if (v[b] < v[a]) {
                    inv += static_cast<std::int64_t>(mid - a);
                    buf[w++] = v[b++];
                } else {
                    buf[w++] = v[a++];
                }
            }
            while (a < mid) buf[w++] = v[a++];
            while (b < hi) buf[w++] = v[b++];
            std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
        }
    }
    return inv;
}

template <typename Pred>
inline std::int64_t tie_pairs(std::size_t n, Pred same) {
    std::int64_t total = 0, run = 1;
    for (std::size_t i = 1; i <= n; ++i) {
        if (i < n && same(i)) {
            ++run;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    return total;
}

}  // namespace detail

/// Pair tallies behind tau-b: n0 total, n1/n2 ties in x/y, n3 joint ties,
/// discordant strict inversions. All exact integers.
struct KendallCounts {
    std::int64_t n0 = 0, n1 = 0, n2 = 0, n3 = 0, discordant = 0;

    double tau() const {
        std::int64_t num = n0 - n1 - n2 + n3 - 2 * discordant;
        double den = std::sqrt(double(n0 - n1)) * std::sqrt(double(n0 - n2));
        return double(num) / den;
    }
};

inline KendallCounts kendall_counts(const Vector& x, const Vector& y) {
    const std::size_t n = static_cast<std::size_t>(x.size());
    if (y.size() != x.size()) throw Error("kendall inputs must have equal length");
    if (n < 2) throw InsufficientSample("kendall needs n >= 2");

    std::vector<std::size_t> ord(n);
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = x[ord[i]];
        ys[i] = y[ord[i]];
    }

    KendallCounts c;
    c.n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
    c.n1 = detail::tie_pairs(n, [&](std::size_t i) { return xs[i] == xs[i - 1]; });
    c.n3 = detail::tie_pairs(
        n, [&](std::size_t i) { return xs[i] == xs[i - 1] && ys[i] == ys[i - 1]; });
    if (c.n1 == c.n0) throw DegenerateColumn(0);

    // Within an x-tie block ys is sorted, so strict y-inversions are exactly
    // the discordant pairs; y-ties never count (strict comparison).
    c.discordant = detail::count_inversions(ys);

    std::sort(ys.begin(), ys.end());
    c.n2 = detail::tie_pairs(n, [&](std::size_t i) { return ys[i] == ys[i - 1]; });
    if (c.n2 == c.n0) throw DegenerateColumn(1);
    return c;
}

inline double kendall_tau_fast(const Vector& x, const Vector& y) {
    return kendall_counts(x, y).tau();
}

struct KendallMatrix {
    int d = 0;
    Matrix tau;
};

inline KendallMatrix kendall_matrix(const DataMatrix& x) {
    const int d = x.d();
    if (x.n() < 2) throw InsufficientSample("kendall needs n >= 2");
    for (int j = 0; j < d; ++j) {
        double lo = x.values.col(j).minCoeff(), hi = x.values.col(j).maxCoeff();
        if (lo == hi) throw DegenerateColumn(static_cast<std::size_t>(j));
    }
    KendallMatrix km;
    km.d = d;
    km.tau = Matrix::Identity(d, d);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) pairs.emplace_back(i, j);
    parallel_for(pairs.size(), [&](std::size_t p) {
        auto [i, j] = pairs[p];
        double t = kendall_tau_fast(x.values.col(i), x.values.col(j));
        km.tau(i, j) = t;
        km.tau(j, i) = t;
    });
    return km;
}

struct ScatterEstimate {
    SpdMatrix corr;
    bool projected = false;
};

/// Entrywise sin(pi tau / 2); projected onto the correlation cone when the
/// raw sine matrix is not positive definite.
inline ScatterEstimate skeptic_correlation(const KendallMatrix& k, double eps = 1e-8) {
    const int d = k.d;
    Matrix r(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            r(i, j) = (i == j) ? 1.0 : std::sin(0.5 * M_PI * k.tau(i, j));
    r = symmetrized(r);
    try {
        SpdMatrix s = cholesky(r);
        return ScatterEstimate{std::move(s), false};
    } catch (const NotPositiveDefinite&) {
        SpdMatrix p = nearest_correlation(r, eps);
        bool changed = (p.mat() - r).cwiseAbs().maxCoeff() > 1e-12;
        return ScatterEstimate{std::move(p), changed};
    }
}

}  // namespace transell
