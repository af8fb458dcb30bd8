#pragma once

// Samplers for elliptical and transelliptical laws through the scale-mixture
// representation X = mu + tau^{-1/2} L z, plus the conditional-law constructor.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "transell/data.hpp"
#include "transell/errors.hpp"
#include "transell/matrix.hpp"
#include "transell/mixing.hpp"
#include "transell/rng.hpp"

namespace transell {

struct EllipticalSpec {
    Vector mu;
    SpdMatrix sigma;
    MixingLaw mixing;

    int dim() const { return sigma.dim(); }
};

inline EllipticalSpec make_elliptical(Vector mu, const Matrix& sigma, MixingLaw mixing) {
    SpdMatrix s = cholesky(sigma);
    if (mu.size() != s.dim()) throw Error("mu dimension does not match sigma");
    return EllipticalSpec{std::move(mu), std::move(s), std::move(mixing)};
}

/// Strictly increasing marginal map g (latent -> observed) with inverse f.
struct Transform {
    std::string name;
    std::function<double(double)> fwd;
    std::function<double(double)> inv;
};

inline Transform identity_transform() {
    return {"identity", [](double x) { return x; }, [](double y) { return y; }};
}
inline Transform exp_transform() {
    return {"exp", [](double x) { return std::exp(x); }, [](double y) { return std::log(y); }};
}
inline Transform cubic_transform() {
    return {"cubic", [](double x) { return x * x * x; }, [](double y) { return std::cbrt(y); }};
}
inline Transform cbrt_transform() {
    return {"cbrt", [](double x) { return std::cbrt(x); }, [](double y) { return y * y * y; }};
}

struct TransellipticalSpec {
    EllipticalSpec base;
    std::vector<Transform> transforms;  // one per coordinate
};

/// n i.i.d. rows; bit-identical for identical (spec, n, seed).
inline DataMatrix sample_elliptical(const EllipticalSpec& spec, long n, std::uint64_t seed) {
    if (n < 1) throw InsufficientSample("sample size must be >= 1");
    const int d = spec.dim();
    Rng rng(seed);
    Matrix out(n, d);
    Vector z(d);
    const Matrix& l = spec.sigma.chol();
    for (long r = 0; r < n; ++r) {
        double tau = spec.mixing.draw(rng);
        for (int j = 0; j < d; ++j) z[j] = rng.normal();
        out.row(r) =
            (spec.mu + (l.triangularView<Eigen::Lower>() * z) / std::sqrt(tau)).transpose();
    }
    return DataMatrix{std::move(out), DataMatrix::default_names(d)};
}

/// Spot-check monotonicity of g on an equispaced grid spanning [lo, hi].
inline void check_increasing(const Transform& t, double lo, double hi, std::size_t coord) {
    const int kPoints = 65;
    if (!(hi > lo)) return;
    double prev = t.fwd(lo);
    for (int i = 1; i < kPoints; ++i) {
        double x = lo + (hi - lo) * double(i) / double(kPoints - 1);
        double cur = t.fwd(x);
        if (!(cur > prev)) throw NonMonotoneTransform(coord);
        prev = cur;
    }
}

inline DataMatrix sample_transelliptical(const TransellipticalSpec& spec, long n,
                                         std::uint64_t seed) {
    const int d = spec.base.dim();
    if (static_cast<int>(spec.transforms.size()) != d)
        throw Error("need one transform per coordinate");
    DataMatrix latent = sample_elliptical(spec.base, n, seed);
    for (int j = 0; j < d; ++j) {
        const auto& t = spec.transforms[j];
        double lo = latent.values.col(j).minCoeff();
        double hi = latent.values.col(j).maxCoeff();
        check_increasing(t, lo, hi, static_cast<std::size_t>(j));
        for (long r = 0; r < n; ++r) latent.values(r, j) = t.fwd(latent.values(r, j));
    }
    return latent;
}

struct ConditionalCfg {
    long mc_n = 20000;          // joint draws for the rejection fallback
    std::uint64_t seed = 1234;  // stream for those draws
    double bw_factor = 0.1;     // bandwidth h_j = bw_factor * sqrt(Sigma_jj)
};

/// Law of X_I given X_J = x_J. Exact for Constant and ChiSqOverK mixing; other
/// mixing laws get a Tabulated conditional mixing estimated by rejection:
/// joint (tau, X_J) draws are kept when every |X_j - x_j| <= h_j, and the kept
/// tau values become an empirical quantile table. If fewer than 200 draws
/// survive, the bandwidth doubles (at most 6 times) before giving up.
inline EllipticalSpec conditional_sampler(const EllipticalSpec& spec, const IndexSet& cond_idx,
                                          const Vector& cond_vals, ConditionalCfg cfg = {}) {
    const int d = spec.dim();
    check_index_set(cond_idx, d, "cond");
    if (cond_vals.size() != static_cast<long>(cond_idx.size()))
        throw Error("cond_vals dimension mismatch");
    if (cond_idx.empty() || static_cast<int>(cond_idx.size()) >= d)
        throw IndexOutOfRange("conditioning set must be a proper nonempty subset");

    IndexSet keep;
    for (int i = 0; i < d; ++i)
        if (std::find(cond_idx.begin(), cond_idx.end(), i) == cond_idx.end()) keep.push_back(i);

    Matrix sJJ = submatrix(spec.sigma.mat(), cond_idx, cond_idx);
    Matrix sIJ = submatrix(spec.sigma.mat(), keep, cond_idx);
    SpdMatrix jj = cholesky(sJJ);
    Vector muJ(cond_idx.size()), muI(keep.size());
    for (std::size_t a = 0; a < cond_idx.size(); ++a) muJ[a] = spec.mu[cond_idx[a]];
    for (std::size_t a = 0; a < keep.size(); ++a) muI[a] = spec.mu[keep[a]];
    Vector delta = cond_vals - muJ;
    Vector adj = jj.solve(delta);
    Vector mu_cond = muI + sIJ * adj;
    SpdMatrix sigma_cond = schur_complement(spec.sigma, keep, cond_idx);

    switch (spec.mixing.kind) {
        case MixingLaw::Kind::Constant:
            return EllipticalSpec{mu_cond, sigma_cond, spec.mixing};
        case MixingLaw::Kind::ChiSqOverK: {
            // Posterior mixing is Gamma((k+m)/2, rate (k+dist)/2); absorbing the
            // rate change into the scale matrix leaves ChiSqOverK(k+m).
            double k = spec.mixing.value;
            double m = static_cast<double>(cond_idx.size());
            double dist = delta.dot(adj);
            double scale = (k + dist) / (k + m);
            Matrix s2 = sigma_cond.mat() * scale;
            return EllipticalSpec{mu_cond, cholesky(s2), MixingLaw::chisq_over_k(k + m)};
        }
        default:
            break;
    }

    // Rejection-resampled conditional mixing.
    Vector h(cond_idx.size());
    for (std::size_t a = 0; a < cond_idx.size(); ++a)
        h[a] = cfg.bw_factor * std::sqrt(sJJ(a, a));
    std::vector<double> taus;
    for (int attempt = 0; attempt <= 6; ++attempt) {
        taus.clear();
        Rng rng(cfg.seed);
        Vector z(cond_idx.size());
        const Matrix& lJ = jj.chol();
        for (long r = 0; r < cfg.mc_n; ++r) {
            double tau = spec.mixing.draw(rng);
            for (std::size_t a = 0; a < cond_idx.size(); ++a) z[a] = rng.normal();
            Vector xJ = muJ + (lJ.triangularView<Eigen::Lower>() * z) / std::sqrt(tau);
            bool inside = true;
            for (std::size_t a = 0; a < cond_idx.size(); ++a)
                if (std::abs(xJ[a] - cond_vals[a]) > h[a] * double(1 << attempt)) {
                    inside = false;
                    break;
                }
            if (inside) taus.push_back(tau);
        }
        if (taus.size() >= 200) break;
    }
    if (taus.size() < 2)
        throw InsufficientSample("conditional rejection sampler accepted too few draws");
    std::sort(taus.begin(), taus.end());
    std::vector<double> probs(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i)
        probs[i] = (double(i) + 0.5) / double(taus.size());
    return EllipticalSpec{mu_cond, sigma_cond, MixingLaw::tabulated(probs, taus)};
}

}  // namespace transell
