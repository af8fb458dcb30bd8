#pragma once

// Gaussian MLE under the M-matrix constraint K_ij <= 0 (i != j): cyclic block
// coordinate ascent over columns, each column a nonnegative quadratic program
// solved by projected coordinate descent. Feasible at every iterate.

#include <cmath>
#include <utility>

#include "transell/errors.hpp"
#include "transell/glasso.hpp"
#include "transell/graph_types.hpp"
#include "transell/matrix.hpp"

namespace transell {

struct PpgFit {
    SpdMatrix precision;
    SpdMatrix covariance;
    double loglik = 0.0;  // log det K - tr(SK), per observation, no constants
    double kkt_residual = 0.0;
    long iterations = 0;
};

namespace detail {

/// KKT violations for the M-matrix MLE, split by family: the equality and
/// feasibility families vanish at the optimum, the slack family is a product
/// of converging factors and dominates the stopping tolerance.
struct PpgResidual {
    double equality = 0.0;     // |W_ii - S_ii|
    double feasibility = 0.0;  // S_ij - W_ij and K_ij > 0
    double slack = 0.0;        // |(W_ij - S_ij) K_ij|

    double worst() const { return std::max(equality, std::max(feasibility, slack)); }
};

inline PpgResidual ppg_kkt(const Matrix& s, const Matrix& k, const Matrix& w) {
    const int d = static_cast<int>(s.rows());
    PpgResidual r;
    for (int i = 0; i < d; ++i) {
        r.equality = std::max(r.equality, std::abs(w(i, i) - s(i, i)));
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            r.feasibility = std::max(r.feasibility, s(i, j) - w(i, j));  // Sigma_ij >= S_ij
            r.feasibility = std::max(r.feasibility, k(i, j));            // K_ij <= 0
            r.slack = std::max(r.slack, std::abs((w(i, j) - s(i, j)) * k(i, j)));
        }
    }
    return r;
}

}  // namespace detail

inline PpgFit ppg_fit(const Matrix& s_in, SolverConfig cfg = {}) {
    const int d = static_cast<int>(s_in.rows());
    if (s_in.cols() != d || d < 1) throw Error("ppg input must be square");
    Matrix s = symmetrized(s_in);
    for (int i = 0; i < d; ++i)
        if (!(s(i, i) > 0.0)) throw InfeasibleInput("ppg needs a positive diagonal");

    Matrix k = Matrix::Zero(d, d);
    Matrix w = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        k(i, i) = 1.0 / s(i, i);
        w(i, i) = s(i, i);
    }
    if (d == 1) return PpgFit{cholesky(k), cholesky(w), std::log(k(0, 0)) - 1.0, 0.0, 0};

    IndexSet others(d - 1);
    Vector w12(d - 1), s12(d - 1), beta(d - 1), u(d - 1);
    Matrix a(d - 1, d - 1);
    detail::PpgResidual kkt = detail::ppg_kkt(s, k, w);
    // The equality and feasibility families are exact at the optimum; hold
    // them an order tighter than the complementary-slack products.
    auto settled = [&cfg](const detail::PpgResidual& r) {
        return r.slack < cfg.tol && r.equality < 0.1 * cfg.tol && r.feasibility < 0.1 * cfg.tol;
    };
    long sweep = 0;
    for (sweep = 1; sweep <= cfg.max_iter; ++sweep) {
        for (int j = 0; j < d; ++j) {
            int t = 0;
            for (int i = 0; i < d; ++i)
                if (i != j) others[t++] = i;
            for (int i = 0; i < d - 1; ++i) {
                w12[i] = w(others[i], j);
                s12[i] = s(others[i], j);
                beta[i] = -k(others[i], j);
            }
            const double s22 = s(j, j);
            const double w22 = w(j, j);
            // A = (K_11)^{-1} from the current inverse, rank-one downdate
            for (int r = 0; r < d - 1; ++r)
                for (int c = 0; c < d - 1; ++c)
                    a(r, c) = w(others[r], others[c]) - w12[r] * w12[c] / w22;

            // min_{beta >= 0} s22 beta' A beta - 2 s12' beta
            Vector g = a * beta;  // running A*beta
            for (long it = 0; it < 2000; ++it) {
                double delta = 0.0;
                for (int i = 0; i < d - 1; ++i) {
                    double rest = g[i] - a(i, i) * beta[i];
                    double bnew = std::max(0.0, (s12[i] - s22 * rest) / (s22 * a(i, i)));
                    double diff = bnew - beta[i];
                    if (diff != 0.0) {
                        g += a.col(i) * diff;
                        beta[i] = bnew;
                        delta = std::max(delta, std::abs(diff));
                    }
                }
                if (delta < 1e-12) break;
            }

            double k22 = 1.0 / s22 + beta.dot(g);
            u = g;  // A * beta = -A * k12
            for (int i = 0; i < d - 1; ++i) {
                k(others[i], j) = -beta[i];
                k(j, others[i]) = -beta[i];
                w(others[i], j) = s22 * u[i];
                w(j, others[i]) = s22 * u[i];
            }
            k(j, j) = k22;
            w(j, j) = s22;
            for (int r = 0; r < d - 1; ++r)
                for (int c = 0; c < d - 1; ++c)
                    w(others[r], others[c]) = a(r, c) + s22 * u[r] * u[c];

            if (k(j, j) > 1e8) throw NotConverged(sweep, k(j, j));
        }
        kkt = detail::ppg_kkt(s, k, w);
        if (settled(kkt)) break;
    }
    if (!settled(kkt)) throw NotConverged(cfg.max_iter, kkt.worst());

    k = symmetrized(k);
    w = symmetrized(w);
    double loglik = log_det(cholesky(k)) - s.cwiseProduct(k).sum();
    return PpgFit{cholesky(k), cholesky(w), loglik, kkt.worst(), sweep};
}

/// Edges where -K_ij exceeds the threshold; weights are the (nonnegative)
/// partial correlations -K_ij / sqrt(K_ii K_jj).
inline PartialCorrelationGraph ppg_graph(const PpgFit& fit, double threshold) {
    const Matrix& k = fit.precision.mat();
    const int d = fit.precision.dim();
    PartialCorrelationGraph g{d, threshold, {}};
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (-k(i, j) > threshold)
                g.edges.push_back({i, j, -k(i, j) / std::sqrt(k(i, i) * k(j, j))});
    return g;
}

}  // namespace transell
