#pragma once

// Scalar mixing laws for scale mixtures of normals, X = mu + tau^{-1/2} L z,
// and the tail-dependence functional
//   lambda = var(1/tau) / (var(1/tau) + 2 E(1/tau^2)).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "transell/errors.hpp"
#include "transell/rng.hpp"

namespace transell {

struct MixingLaw {
    enum class Kind { Constant, ChiSqOverK, Exponential, Tabulated };

    Kind kind = Kind::Constant;
    double value = 1.0;  // Constant level, chi-square dof, or exponential rate
    std::vector<double> tab_probs;   // ascending, inside (0,1)
    std::vector<double> tab_values;  // quantiles at tab_probs

    static MixingLaw constant(double v = 1.0) {
        if (v <= 0.0) throw InvalidMixing("constant mixing level must be positive");
        return MixingLaw{Kind::Constant, v, {}, {}};
    }
    static MixingLaw chisq_over_k(double k) {
        if (k <= 0.0) throw InvalidMixing("chi-square dof must be positive");
        return MixingLaw{Kind::ChiSqOverK, k, {}, {}};
    }
    static MixingLaw exponential(double rate = 1.0) {
        if (rate <= 0.0) throw InvalidMixing("exponential rate must be positive");
        return MixingLaw{Kind::Exponential, rate, {}, {}};
    }
    /// Inverse-CDF table: linear interpolation between (prob, quantile) knots,
    /// flat beyond the first/last knot.
    static MixingLaw tabulated(std::vector<double> probs, std::vector<double> values) {
        if (probs.size() != values.size() || probs.size() < 2)
            throw InvalidMixing("tabulated mixing needs >= 2 (prob, value) knots");
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] <= 0.0 || probs[i] >= 1.0)
                throw InvalidMixing("tabulated probs must lie in (0,1)");
            if (i > 0 && probs[i] <= probs[i - 1])
                throw InvalidMixing("tabulated probs must be strictly increasing");
        }
        MixingLaw m;
        m.kind = Kind::Tabulated;
        m.tab_probs = std::move(probs);
        m.tab_values = std::move(values);
        return m;
    }

    double quantile(double u) const {
        const auto& p = tab_probs;
        const auto& q = tab_values;
        if (u <= p.front()) return q.front();
        if (u >= p.back()) return q.back();
        auto it = std::upper_bound(p.begin(), p.end(), u);
        std::size_t hi = static_cast<std::size_t>(it - p.begin());
        std::size_t lo = hi - 1;
        double w = (u - p[lo]) / (p[hi] - p[lo]);
        return q[lo] + w * (q[hi] - q[lo]);
    }

    double draw(Rng& rng) const {
        switch (kind) {
            case Kind::Constant:
                return value;
            case Kind::ChiSqOverK:
                return rng.chisq(value) / value;
            case Kind::Exponential:
                return rng.exponential(value);
            case Kind::Tabulated: {
                double v = quantile(rng.uniform());
                if (!(v > 0.0))
                    throw InvalidMixing("tabulated quantile returned a non-positive value");
                return v;
            }
        }
        throw InvalidMixing("unknown mixing kind");
    }

    std::string describe() const {
        switch (kind) {
            case Kind::Constant: return "constant(" + std::to_string(value) + ")";
            case Kind::ChiSqOverK: return "chisq_over_k(" + std::to_string(value) + ")";
            case Kind::Exponential: return "exponential(" + std::to_string(value) + ")";
            case Kind::Tabulated: return "tabulated(" + std::to_string(tab_probs.size()) + " knots)";
        }
        return "?";
    }
};

struct LambdaValue {
    double lambda = 0.0;  // in [0,1]
    bool exact = false;   // closed form vs Monte-Carlo
    double mc_se = 0.0;   // batch-means standard error when Monte-Carlo
};

/// Monte-Carlo draws below this floor are dropped (the estimate is conditional
/// on tau >= floor). Needed because Exponential mixing has infinite E(1/tau^2);
/// the truncated functional is what the report quotes.
inline constexpr double kLambdaTauFloor = 1e-4;

inline LambdaValue lambda_of_mixing(const MixingLaw& mixing, long mc_n = 200000,
                                    std::uint64_t seed = 1) {
    switch (mixing.kind) {
        case MixingLaw::Kind::Constant:
            return LambdaValue{0.0, true, 0.0};
        case MixingLaw::Kind::ChiSqOverK: {
            double k = mixing.value;
            if (k <= 4.0)
                throw MomentUndefined("lambda needs chi-square dof > 4 (E(1/tau^2) finite)");
            return LambdaValue{1.0 / (k - 1.0), true, 0.0};
        }
        default:
            break;
    }
    if (mc_n < 1000) throw InsufficientSample("lambda Monte-Carlo needs >= 1000 draws");
    Rng rng(seed);
    const int n_batches = 20;
    std::vector<double> batch_lambda;
    batch_lambda.reserve(n_batches);
    long per_batch = mc_n / n_batches;
    double total_m1 = 0.0, total_m2 = 0.0;
    long total_kept = 0;
    for (int b = 0; b < n_batches; ++b) {
        double m1 = 0.0, m2 = 0.0;
        long kept = 0;
        for (long i = 0; i < per_batch; ++i) {
            double tau = mixing.draw(rng);
            if (tau < kLambdaTauFloor) continue;
            double inv = 1.0 / tau;
            m1 += inv;
            m2 += inv * inv;
            ++kept;
        }
        if (kept == 0) continue;
        total_m1 += m1;
        total_m2 += m2;
        total_kept += kept;
        m1 /= kept;
        m2 /= kept;
        double var = std::max(m2 - m1 * m1, 0.0);
        batch_lambda.push_back(var / (var + 2.0 * m2));
    }
    if (total_kept == 0) throw MomentUndefined("all mixing draws fell below the tau floor");
    double m1 = total_m1 / total_kept;
    double m2 = total_m2 / total_kept;
    double var = std::max(m2 - m1 * m1, 0.0);
    double lam = var / (var + 2.0 * m2);
    double se = 0.0;
    if (batch_lambda.size() > 1) {
        double mean = 0.0;
        for (double v : batch_lambda) mean += v;
        mean /= batch_lambda.size();
        double ss = 0.0;
        for (double v : batch_lambda) ss += (v - mean) * (v - mean);
        se = std::sqrt(ss / (batch_lambda.size() - 1)) / std::sqrt(double(batch_lambda.size()));
    }
    return LambdaValue{std::clamp(lam, 0.0, 1.0), false, se};
}

}  // namespace transell
