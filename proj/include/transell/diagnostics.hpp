#pragma once

// Model selection (EBIC) and dependence diagnostics: partial correlations,
// tail-dependence indices, conditional Kendall tau, Mahalanobis calibration,
// and the faithfulness / propagation audit.

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "transell/data.hpp"
#include "transell/errors.hpp"
#include "transell/glasso.hpp"
#include "transell/graph_types.hpp"
#include "transell/matrix.hpp"

namespace transell {

/// rho_{ij.rest} = -K_ij / sqrt(K_ii K_jj), unit diagonal.
inline Matrix partial_correlations(const SpdMatrix& k) {
    const int d = k.dim();
    const Matrix& m = k.mat();
    Matrix p(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            p(i, j) = (i == j) ? 1.0 : -m(i, j) / std::sqrt(m(i, i) * m(j, j));
    return p;
}

inline PartialCorrelationGraph precision_graph(const SpdMatrix& k, double threshold) {
    const int d = k.dim();
    const Matrix& m = k.mat();
    PartialCorrelationGraph g{d, threshold, {}};
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (std::abs(m(i, j)) > threshold)
                g.edges.push_back({i, j, -m(i, j) / std::sqrt(m(i, i) * m(j, j))});
    return g;
}

/// Coefficients of E[X_i | X_{(i)}]: -K_{i,(i)} / K_ii.
inline Vector conditional_mean_coeffs(const SpdMatrix& k, int i) {
    const int d = k.dim();
    if (i < 0 || i >= d) throw IndexOutOfRange("conditional_mean_coeffs index");
    Vector c(d - 1);
    int t = 0;
    for (int j = 0; j < d; ++j)
        if (j != i) c[t++] = -k.mat()(i, j) / k.mat()(i, i);
    return c;
}

inline double conditional_kendall(const SpdMatrix& k, int i, int j) {
    const int d = k.dim();
    if (i < 0 || i >= d || j < 0 || j >= d || i == j)
        throw IndexOutOfRange("conditional_kendall indices");
    double rho = -k.mat()(i, j) / std::sqrt(k.mat()(i, i) * k.mat()(j, j));
    return (2.0 / M_PI) * std::asin(rho);
}

struct TailDependenceReport {
    Matrix theta_marginal;
    Matrix theta_conditional;
    Matrix rho_sq_marginal;
    Matrix rho_sq_conditional;
    double lambda_hat = 0.0;
    double slope_hat = 0.0;
};

/// Squared-variable correlations against their elliptical predictions
/// lambda + (1-lambda) rho^2; lambda_hat is the intercept of regressing the
/// conditional theta entries on the squared partial correlations.
inline TailDependenceReport tail_dependence_report(const DataMatrix& x, const SpdMatrix& k_hat) {
    const long n = x.n();
    const int d = x.d();
    if (n <= d + 2) throw InsufficientSample("tail dependence needs n > d + 2");
    if (k_hat.dim() != d) throw Error("k_hat dimension mismatch");

    Matrix z = standardized_columns(x.values);
    Matrix r = pearson_correlation(x.values);
    Matrix pc = partial_correlations(k_hat);

    TailDependenceReport rep;
    rep.theta_marginal = Matrix::Identity(d, d);
    rep.theta_conditional = Matrix::Identity(d, d);
    rep.rho_sq_marginal = Matrix::Ones(d, d);
    rep.rho_sq_conditional = Matrix::Ones(d, d);

    Matrix z2 = z.cwiseProduct(z);
    Matrix gram = z.transpose() * z;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            rep.theta_marginal(i, j) = rep.theta_marginal(j, i) = sample_corr(z2.col(i), z2.col(j));
            rep.rho_sq_marginal(i, j) = rep.rho_sq_marginal(j, i) = r(i, j) * r(i, j);
            rep.rho_sq_conditional(i, j) = rep.rho_sq_conditional(j, i) = pc(i, j) * pc(i, j);

            Vector ei = z.col(i), ej = z.col(j);
            if (d > 2) {
                IndexSet rest;
                for (int l = 0; l < d; ++l)
                    if (l != i && l != j) rest.push_back(l);
                Matrix grr = submatrix(gram, rest, rest);
                SpdMatrix sr = cholesky(grr);
                Vector gi(rest.size()), gj(rest.size());
                for (std::size_t a = 0; a < rest.size(); ++a) {
                    gi[a] = gram(rest[a], i);
                    gj[a] = gram(rest[a], j);
                }
                Vector ci = sr.solve(gi), cj = sr.solve(gj);
                for (std::size_t a = 0; a < rest.size(); ++a) {
                    ei -= z.col(rest[a]) * ci[a];
                    ej -= z.col(rest[a]) * cj[a];
                }
            }
            rep.theta_conditional(i, j) = rep.theta_conditional(j, i) =
                sample_corr(ei.cwiseProduct(ei), ej.cwiseProduct(ej));
        }
    }

    // theta_cond ~ a + b * rho_sq_cond over pairs; a estimates lambda.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long m = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            double xx = rep.rho_sq_conditional(i, j), yy = rep.theta_conditional(i, j);
            sx += xx;
            sy += yy;
            sxx += xx * xx;
            sxy += xx * yy;
            ++m;
        }
    double denom = double(m) * sxx - sx * sx;
    if (std::abs(denom) > 1e-14 * double(m)) {
        rep.slope_hat = (double(m) * sxy - sx * sy) / denom;
        rep.lambda_hat = (sy - rep.slope_hat * sx) / double(m);
    } else {
        rep.slope_hat = 0.0;
        rep.lambda_hat = m > 0 ? sy / double(m) : 0.0;
    }
    return rep;
}

struct EbicScore {
    double loglik = 0.0;  // per observation
    long edge_count = 0;
    double gamma = 0.5;
    long n = 0;
    int d = 0;
    double score = 0.0;
};

inline EbicScore ebic(double loglik_per_obs, long edge_count, long n, int d, double gamma) {
    if (gamma < 0.0 || gamma > 1.0) throw Error("ebic gamma must be in [0,1]");
    EbicScore e{loglik_per_obs, edge_count, gamma, n, d, 0.0};
    e.score = -2.0 * double(n) * loglik_per_obs +
              double(edge_count) * (std::log(double(n)) + 4.0 * gamma * std::log(double(d)));
    return e;
}

inline long count_edges(const Matrix& k, double threshold = 1e-8) {
    long c = 0;
    for (int i = 0; i < k.rows(); ++i)
        for (int j = i + 1; j < k.cols(); ++j)
            if (std::abs(k(i, j)) > threshold) ++c;
    return c;
}

inline double gaussian_loglik(const Matrix& s, const SpdMatrix& k) {
    return log_det(k) - s.cwiseProduct(k.mat()).sum();
}

namespace detail {

/// Unpenalized Gaussian MLE restricted to a fixed zero pattern (classical
/// covariance selection by cyclic column regressions on W, started at S).
/// Returns the refit log-likelihood per observation, or the fallback value
/// when the restricted problem fails to solve.
inline double support_loglik(const Matrix& s, const std::vector<bool>& allowed, double fallback,
                             SolverConfig cfg) {
    const int d = static_cast<int>(s.rows());
    double max_diag = 0.0;
    for (int i = 0; i < d; ++i) max_diag = std::max(max_diag, s(i, i));
    try {
        Matrix w = s;
        for (long sweep = 0; sweep < cfg.max_iter; ++sweep) {
            double delta = 0.0;
            for (int j = 0; j < d; ++j) {
                IndexSet act;
                for (int i = 0; i < d; ++i)
                    if (i != j && allowed[std::size_t(i) * std::size_t(d) + std::size_t(j)])
                        act.push_back(i);
                Vector w12 = Vector::Zero(d);
                if (!act.empty()) {
                    IndexSet rest;
                    for (int i = 0; i < d; ++i)
                        if (i != j) rest.push_back(i);
                    Matrix waa = submatrix(w, act, act);
                    Vector sa(long(act.size()));
                    for (std::size_t t = 0; t < act.size(); ++t) sa[long(t)] = s(act[t], j);
                    Vector ba = waa.ldlt().solve(sa);
                    Matrix wra = submatrix(w, rest, act);
                    Vector wr = wra * ba;
                    for (std::size_t t = 0; t < rest.size(); ++t) w12[rest[t]] = wr[long(t)];
                }
                for (int i = 0; i < d; ++i) {
                    if (i == j) continue;
                    delta = std::max(delta, std::abs(w12[i] - w(i, j)));
                    w(i, j) = w12[i];
                    w(j, i) = w12[i];
                }
            }
            if (delta < 1e-9 * max_diag) break;
        }
        SpdMatrix k = cholesky(symmetrized(w)).inverse();
        return gaussian_loglik(s, k);
    } catch (const Error&) {
        return fallback;
    }
}

}  // namespace detail

/// Warm-started glasso fits along the path, each candidate scored by EBIC at
/// the unpenalized MLE refit on its support (the penalized log-likelihood
/// would bias selection toward dense models). Returns the argmin with ties
/// broken toward larger lambda (the sparser model).
inline std::pair<GlassoFit, EbicScore> select_model(const Matrix& s, long n,
                                                    std::vector<double> path, double gamma,
                                                    SolverConfig cfg = {}) {
    if (path.empty()) throw Error("select_model needs a nonempty lambda path");
    std::sort(path.begin(), path.end(), std::greater<double>());
    const int d = static_cast<int>(s.rows());
    GlassoState state;
    bool have_best = false;
    GlassoFit best;
    EbicScore best_score;
    std::vector<bool> prev_mask;
    double prev_loglik = 0.0;
    for (double lam : path) {
        GlassoFit fit = glasso_fit(s, lam, cfg, &state);
        const Matrix& k = fit.precision.mat();
        std::vector<bool> mask(std::size_t(d) * std::size_t(d), false);
        long edges = 0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                if (i != j && std::abs(k(i, j)) > 1e-8) {
                    mask[std::size_t(i) * std::size_t(d) + std::size_t(j)] = true;
                    if (i < j) ++edges;
                }
        double loglik;
        if (have_best && mask == prev_mask) {
            loglik = prev_loglik;
        } else {
            loglik = detail::support_loglik(s, mask, gaussian_loglik(s, fit.precision), cfg);
        }
        prev_mask = std::move(mask);
        prev_loglik = loglik;
        EbicScore sc = ebic(loglik, edges, n, d, gamma);
        if (!have_best || sc.score < best_score.score) {
            best = std::move(fit);
            best_score = sc;
            have_best = true;
        }
    }
    return {std::move(best), best_score};
}

/// Conditional correlation corr(X_i, X_j | X_C) from the covariance.
inline double conditional_correlation(const Matrix& sigma, int i, int j, const IndexSet& c) {
    IndexSet pair{i, j};
    Matrix m;
    if (c.empty()) {
        m = submatrix(sigma, pair, pair);
    } else {
        Matrix scc = submatrix(sigma, c, c);
        Matrix spc = submatrix(sigma, pair, c);
        SpdMatrix f = cholesky(scc);
        m = submatrix(sigma, pair, pair) - spc * f.solve(spc.transpose());
    }
    return m(0, 1) / std::sqrt(m(0, 0) * m(1, 1));
}

struct AuditViolation {
    int i = 0;
    int j = 0;
    std::vector<int> cond;    // conditioning set C
    std::vector<int> larger;  // superset D for propagation violations, else empty
    double value = 0.0;
};

struct FaithfulnessReport {
    bool is_im = false;
    std::vector<AuditViolation> sign_violations;
    std::vector<AuditViolation> propagation_violations;
};

namespace detail {

inline std::vector<int> bits_to_set(unsigned mask, const std::vector<int>& pool) {
    std::vector<int> out;
    for (std::size_t b = 0; b < pool.size(); ++b)
        if (mask & (1u << b)) out.push_back(pool[b]);
    return out;
}

}  // namespace detail

/// Exhaustive audit over all (i, j, C). Sign violations are only meaningful
/// under the inverse M-matrix hypothesis, so they are reported only when the
/// certificate passes; propagation violations are structural and always
/// reported.
inline FaithfulnessReport faithfulness_audit(const SpdMatrix& sigma, double tol = 1e-8) {
    const int d = sigma.dim();
    if (d > 12) throw DimensionTooLarge("faithfulness_audit supports d <= 12");
    FaithfulnessReport rep;
    rep.is_im = m_matrix_certificate(sigma.inverse().mat()).is_m_matrix;

    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            std::vector<int> pool;
            for (int l = 0; l < d; ++l)
                if (l != i && l != j) pool.push_back(l);
            const unsigned nmask = 1u << pool.size();
            std::vector<double> corr(nmask);
            for (unsigned m = 0; m < nmask; ++m) {
                IndexSet c;
                for (std::size_t b = 0; b < pool.size(); ++b)
                    if (m & (1u << b)) c.push_back(pool[b]);
                corr[m] = conditional_correlation(sigma.mat(), i, j, c);
                if (rep.is_im && corr[m] < -tol)
                    rep.sign_violations.push_back(
                        {i, j, detail::bits_to_set(m, pool), {}, corr[m]});
            }
            for (unsigned m = 0; m < nmask; ++m) {
                if (std::abs(corr[m]) > tol) continue;
                for (unsigned dd = 0; dd < nmask; ++dd) {
                    if ((dd & m) != m || dd == m) continue;
                    if (std::abs(corr[dd]) > tol)
                        rep.propagation_violations.push_back({i, j, detail::bits_to_set(m, pool),
                                                              detail::bits_to_set(dd, pool),
                                                              corr[dd]});
                }
            }
        }
    }
    return rep;
}

struct MahalanobisReport {
    std::vector<double> distances;
    double q95 = 0.0;  // chi-square(d) quantiles
    double q99 = 0.0;
    double frac95 = 0.0;  // observed exceedance fractions
    double frac99 = 0.0;
};

/// Squared Mahalanobis distances of centered rows under S, with chi-square
/// exceedance calibration.
inline MahalanobisReport mahalanobis_gof(const DataMatrix& x, const SpdMatrix& s) {
    const long n = x.n();
    const int d = x.d();
    if (s.dim() != d) throw Error("mahalanobis scatter dimension mismatch");
    if (n < 1) throw InsufficientSample("mahalanobis needs n >= 1");
    Vector mean = x.values.colwise().mean().transpose();
    MahalanobisReport rep;
    rep.distances.resize(n);
    long c95 = 0, c99 = 0;
    rep.q95 = gsl_cdf_chisq_Pinv(0.95, double(d));
    rep.q99 = gsl_cdf_chisq_Pinv(0.99, double(d));
    for (long r = 0; r < n; ++r) {
        Vector v = x.values.row(r).transpose() - mean;
        Vector sv = s.solve(v);
        double dist = v.dot(sv);
        rep.distances[r] = dist;
        if (dist > rep.q95) ++c95;
        if (dist > rep.q99) ++c99;
    }
    rep.frac95 = double(c95) / double(n);
    rep.frac99 = double(c99) / double(n);
    return rep;
}

/// Rows whose coordinates in cols all lie within h of x0 (slab conditioning).
inline std::vector<long> slab_rows(const DataMatrix& x, const IndexSet& cols, const Vector& x0,
                                   double h) {
    check_index_set(cols, x.d(), "slab");
    if (x0.size() != static_cast<long>(cols.size())) throw Error("slab center dimension mismatch");
    std::vector<long> rows;
    for (long r = 0; r < x.n(); ++r) {
        bool in = true;
        for (std::size_t a = 0; a < cols.size(); ++a)
            if (std::abs(x.values(r, cols[a]) - x0[a]) >= h) {
                in = false;
                break;
            }
        if (in) rows.push_back(r);
    }
    return rows;
}

}  // namespace transell
