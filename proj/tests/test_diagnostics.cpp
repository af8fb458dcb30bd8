#include <gtest/gtest.h>

#include <cmath>

#include "transell/data.hpp"
#include "transell/diagnostics.hpp"
#include "transell/errors.hpp"
#include "transell/glasso.hpp"
#include "transell/kendall.hpp"
#include "transell/rng.hpp"
#include "transell/sampling.hpp"

using namespace transell;

namespace {

Matrix random_pd(int d, Rng& rng) {
    Matrix b(d, d + 3);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d + 3; ++j) b(i, j) = rng.normal();
    Matrix s = b * b.transpose() / double(d + 3);
    s.diagonal().array() += 0.2;
    return s;
}

Matrix random_m_matrix(int d, Rng& rng) {
    Matrix k = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            double v = -std::abs(rng.normal()) * 0.3;
            k(i, j) = k(j, i) = v;
        }
    for (int i = 0; i < d; ++i) k(i, i) = -k.row(i).sum() + 0.1 + rng.uniform();
    return k;
}

// Chain precision: unit diagonal, -rho on the first off-diagonal, rescaled to
// keep it PD; covariance is its inverse.
Matrix chain_precision(int d, double rho) {
    Matrix k = Matrix::Identity(d, d);
    for (int i = 0; i + 1 < d; ++i) k(i, i + 1) = k(i + 1, i) = -rho;
    return k;
}

}  // namespace

TEST(PartialCorrelations, HandCases) {
    Matrix k2(2, 2);
    k2 << 1.0, -0.5, -0.5, 1.0;
    Matrix p = partial_correlations(cholesky(k2));
    EXPECT_DOUBLE_EQ(p(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(p(0, 0), 1.0);

    Matrix p_id = partial_correlations(cholesky(Matrix::Identity(3, 3)));
    EXPECT_LT((p_id - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PartialCorrelations, MatchesSchurComplementRoute) {
    Rng rng(61);
    for (int d : {3, 8, 20}) {
        Matrix k = random_pd(d, rng);
        SpdMatrix kf = cholesky(k);
        Matrix p = partial_correlations(kf);
        Matrix sigma = kf.inverse().mat();
        SpdMatrix sf = cholesky(sigma);
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                IndexSet keep{i, j}, out;
                for (int l = 0; l < d; ++l)
                    if (l != i && l != j) out.push_back(l);
                Matrix c = schur_complement(sf, keep, out).mat();
                double oracle = c(0, 1) / std::sqrt(c(0, 0) * c(1, 1));
                EXPECT_NEAR(p(i, j), oracle, 1e-8) << "d=" << d << " (" << i << "," << j << ")";
            }
    }
}

TEST(ConditionalMeanCoeffs, HandCases) {
    Vector zero = conditional_mean_coeffs(cholesky(Matrix::Identity(4, 4)), 2);
    EXPECT_LT(zero.cwiseAbs().maxCoeff(), 1e-15);

    Rng rng(62);
    Matrix k = random_m_matrix(5, rng);
    for (int i = 0; i < 5; ++i) {
        Vector c = conditional_mean_coeffs(cholesky(k), i);
        ASSERT_EQ(c.size(), 4);
        EXPECT_GE(c.minCoeff(), 0.0);
    }
}

TEST(ConditionalMeanCoeffs, MatchesRegressionOracle) {
    Rng rng(63);
    Matrix k = random_pd(4, rng);
    SpdMatrix kf = cholesky(k);
    Matrix sigma = kf.inverse().mat();
    DataMatrix x = sample_elliptical(
        make_elliptical(Vector::Zero(4), sigma, MixingLaw::constant(1.0)), 200000, 64);
    for (int i = 0; i < 4; ++i) {
        Vector coeffs = conditional_mean_coeffs(kf, i);
        IndexSet others;
        for (int j = 0; j < 4; ++j)
            if (j != i) others.push_back(j);
        Matrix xo(x.n(), 3);
        for (int a = 0; a < 3; ++a) xo.col(a) = x.values.col(others[a]);
        Vector beta = (xo.transpose() * xo).ldlt().solve(xo.transpose() * x.values.col(i));
        EXPECT_LT((coeffs - beta).cwiseAbs().maxCoeff(), 0.02) << "i=" << i;
    }
}

TEST(ConditionalKendall, ClosedForm) {
    Matrix k(2, 2);
    k << 1.0, -0.5, -0.5, 1.0;
    EXPECT_NEAR(conditional_kendall(cholesky(k), 0, 1), 1.0 / 3.0, 1e-15);
    EXPECT_DOUBLE_EQ(conditional_kendall(cholesky(Matrix::Identity(3, 3)), 0, 2), 0.0);
}

TEST(ConditionalKendall, SlabMonteCarloAgreesWithFormula) {
    Matrix sigma(3, 3);
    sigma << 1.0, 0.5, 0.2, 0.5, 1.0, 0.4, 0.2, 0.4, 1.0;
    SpdMatrix sf = cholesky(sigma);
    SpdMatrix kf = sf.inverse();
    EllipticalSpec spec = make_elliptical(Vector::Zero(3), sigma, MixingLaw::chisq_over_k(5.0));
    DataMatrix x = sample_elliptical(spec, 200000, 65);
    Vector x0(1);
    x0 << 0.3;
    std::vector<long> rows = slab_rows(x, {2}, x0, 0.25);
    ASSERT_GT(rows.size(), 2000u);
    Vector xi(rows.size()), xj(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        xi[r] = x.values(rows[r], 0);
        xj[r] = x.values(rows[r], 1);
    }
    double tau_hat = kendall_tau_fast(xi, xj);
    double m = double(rows.size());
    double se = std::sqrt(2.0 * (2.0 * m + 5.0) / (9.0 * m * (m - 1.0)));
    EXPECT_NEAR(tau_hat, conditional_kendall(kf, 0, 1), 3.0 * se);
}

TEST(TailDependence, GaussianInterceptNearZero) {
    Matrix sigma(3, 3);
    sigma << 1.0, 0.5, 0.2, 0.5, 1.0, 0.4, 0.2, 0.4, 1.0;
    EllipticalSpec spec = make_elliptical(Vector::Zero(3), sigma, MixingLaw::constant(1.0));
    DataMatrix x = sample_elliptical(spec, 100000, 66);
    TailDependenceReport rep = tail_dependence_report(x, cholesky(sigma).inverse());
    EXPECT_NEAR(rep.lambda_hat, 0.0, 0.02);
}

TEST(TailDependence, StudentT11MarginalLevel) {
    EllipticalSpec spec =
        make_elliptical(Vector::Zero(3), Matrix::Identity(3, 3), MixingLaw::chisq_over_k(11.0));
    DataMatrix x = sample_elliptical(spec, 200000, 67);
    TailDependenceReport rep = tail_dependence_report(x, cholesky(Matrix::Identity(3, 3)));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) {
                EXPECT_NEAR(rep.theta_marginal(i, j), 0.1, 0.03);
            }
}

TEST(TailDependence, ShapeInvariants) {
    Matrix sigma(3, 3);
    sigma << 1.0, 0.5, 0.2, 0.5, 1.0, 0.4, 0.2, 0.4, 1.0;
    EllipticalSpec spec = make_elliptical(Vector::Zero(3), sigma, MixingLaw::chisq_over_k(7.0));
    DataMatrix x = sample_elliptical(spec, 20000, 68);
    TailDependenceReport rep = tail_dependence_report(x, cholesky(sigma).inverse());
    for (const Matrix* m : {&rep.theta_marginal, &rep.theta_conditional, &rep.rho_sq_marginal,
                            &rep.rho_sq_conditional}) {
        EXPECT_LT((*m - m->transpose()).cwiseAbs().maxCoeff(), 1e-12);
        for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ((*m)(i, i), 1.0);
    }
    EXPECT_LE(rep.theta_marginal.cwiseAbs().maxCoeff(), 1.0);
}

TEST(TailDependence, TooFewRowsThrows) {
    DataMatrix x;
    x.values = Matrix::Zero(5, 3);
    x.names = DataMatrix::default_names(3);
    EXPECT_THROW(tail_dependence_report(x, cholesky(Matrix::Identity(3, 3))), InsufficientSample);
}

TEST(Ebic, ClosedFormArithmetic) {
    EbicScore zero_edges = ebic(-1.5, 0, 1000, 10, 0.7);
    EXPECT_DOUBLE_EQ(zero_edges.score, -2.0 * 1000 * -1.5);

    EbicScore bic = ebic(-1.5, 7, 1000, 10, 0.0);
    EXPECT_DOUBLE_EQ(bic.score, -2.0 * 1000 * -1.5 + 7.0 * std::log(1000.0));

    EbicScore a = ebic(-1.5, 7, 1000, 10, 0.5);
    EbicScore b = ebic(-1.5, 8, 1000, 10, 0.5);
    double unit = std::log(1000.0) + 4.0 * 0.5 * std::log(10.0);
    EXPECT_DOUBLE_EQ(a.score, -2.0 * 1000 * -1.5 + 7.0 * unit);
    EXPECT_DOUBLE_EQ(b.score, -2.0 * 1000 * -1.5 + 8.0 * unit);
    EXPECT_NEAR(b.score - a.score, unit, 1e-9);  // differencing loses a few bits
}

TEST(GaussianLoglik, MatchesDefinition) {
    Rng rng(69);
    Matrix s = random_pd(4, rng);
    Matrix k = random_pd(4, rng);
    SpdMatrix kf = cholesky(k);
    EXPECT_NEAR(gaussian_loglik(s, kf), kf.log_det() - (s * k).trace(), 1e-12);
}

TEST(SelectModel, IdentityPicksEmptyGraph) {
    Matrix s = Matrix::Identity(5, 5);
    auto [fit, score] = select_model(s, 1000, {0.5, 0.1, 0.01}, 0.5);
    EXPECT_EQ(score.edge_count, 0);
    EXPECT_DOUBLE_EQ(fit.lambda, 0.5);  // tie on score resolves to the sparser end
}

TEST(SelectModel, SinglePointPath) {
    Rng rng(70);
    Matrix s = correlation_rescale(random_pd(4, rng));
    auto [fit, score] = select_model(s, 500, {0.2}, 0.5);
    EXPECT_DOUBLE_EQ(fit.lambda, 0.2);
    EXPECT_EQ(score.n, 500);
    EXPECT_EQ(score.d, 4);
}

TEST(SelectModel, RecoversChainGraph) {
    const int d = 10;
    Matrix k_true = chain_precision(d, 0.45);
    Matrix sigma = cholesky(k_true).inverse().mat();
    EllipticalSpec spec = make_elliptical(Vector::Zero(d), sigma, MixingLaw::constant(1.0));
    DataMatrix x = sample_elliptical(spec, 5000, 71);
    Matrix s = pearson_correlation(x.values);
    auto [fit, score] = select_model(s, 5000, lambda_path(s, 30), 0.5);

    const Matrix& k = fit.precision.mat();
    int missing = 0, spurious = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            bool truth = (j == i + 1);
            bool found = std::abs(k(i, j)) > 1e-8;
            if (truth && !found) ++missing;
            if (!truth && found) ++spurious;
        }
    EXPECT_LE(missing + spurious, 1) << "missing=" << missing << " spurious=" << spurious;
    (void)score;
}

TEST(SelectModel, EmptyPathThrows) {
    EXPECT_THROW(select_model(Matrix::Identity(3, 3), 100, {}, 0.5), Error);
}

TEST(Faithfulness, IdentityIsClean) {
    FaithfulnessReport rep = faithfulness_audit(cholesky(Matrix::Identity(4, 4)));
    EXPECT_TRUE(rep.is_im);
    EXPECT_TRUE(rep.sign_violations.empty());
    EXPECT_TRUE(rep.propagation_violations.empty());
}

TEST(Faithfulness, ImScatterHasNoViolations) {
    Rng rng(72);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix k = random_m_matrix(5, rng);
        Matrix sigma = cholesky(k).inverse().mat();
        FaithfulnessReport rep = faithfulness_audit(cholesky(sigma));
        EXPECT_TRUE(rep.is_im) << "trial " << trial;
        EXPECT_TRUE(rep.sign_violations.empty()) << "trial " << trial;
        EXPECT_TRUE(rep.propagation_violations.empty()) << "trial " << trial;
    }
}

TEST(Faithfulness, SimpsonInstanceIsFlagged) {
    // K12 = K13*K23 makes the marginal corr(X1,X2) exactly zero while the
    // partial correlation given X3 is 0.36: a zero that fails to propagate.
    Matrix k(3, 3);
    k << 1.0, -0.36, 0.6, -0.36, 1.0, -0.6, 0.6, -0.6, 1.0;
    Matrix sigma = cholesky(k).inverse().mat();
    ASSERT_NEAR(sigma(0, 1) / std::sqrt(sigma(0, 0) * sigma(1, 1)), 0.0, 1e-12);
    FaithfulnessReport rep = faithfulness_audit(cholesky(sigma));
    EXPECT_FALSE(rep.is_im);
    ASSERT_FALSE(rep.propagation_violations.empty());
    const AuditViolation& v = rep.propagation_violations.front();
    EXPECT_EQ(v.i, 0);
    EXPECT_EQ(v.j, 1);
}

TEST(Faithfulness, DimensionCap) {
    EXPECT_THROW(faithfulness_audit(cholesky(Matrix::Identity(13, 13))), DimensionTooLarge);
    EXPECT_NO_THROW(faithfulness_audit(cholesky(Matrix::Identity(12, 12))));
}

TEST(Mahalanobis, GaussianCalibration) {
    Matrix sigma(3, 3);
    sigma << 1.0, 0.5, 0.2, 0.5, 1.0, 0.4, 0.2, 0.4, 1.0;
    EllipticalSpec spec = make_elliptical(Vector::Zero(3), sigma, MixingLaw::constant(1.0));
    DataMatrix x = sample_elliptical(spec, 100000, 73);
    MahalanobisReport rep = mahalanobis_gof(x, cholesky(sigma));
    EXPECT_NEAR(rep.frac95, 0.05, 0.01);
    EXPECT_NEAR(rep.frac99, 0.01, 0.01);
    EXPECT_NEAR(rep.q95, 7.814727903251179, 1e-9);  // chi-square(3) quantile
    ASSERT_EQ(rep.distances.size(), 100000u);
}

TEST(Mahalanobis, HeavyTailsExceedGaussianRate) {
    Matrix sigma = Matrix::Identity(3, 3);
    EllipticalSpec spec = make_elliptical(Vector::Zero(3), sigma, MixingLaw::chisq_over_k(5.0));
    DataMatrix x = sample_elliptical(spec, 100000, 74);
    MahalanobisReport rep = mahalanobis_gof(x, cholesky(sigma));
    EXPECT_GT(rep.frac95, 0.06);
}

TEST(Mahalanobis, SingleRowIsAtTheMean) {
    DataMatrix x;
    x.values = Matrix::Zero(1, 2);
    x.values << 3.0, -1.0;
    x.names = DataMatrix::default_names(2);
    MahalanobisReport rep = mahalanobis_gof(x, cholesky(Matrix::Identity(2, 2)));
    EXPECT_DOUBLE_EQ(rep.distances[0], 0.0);
}

TEST(SlabRows, PicksTheRequestedWindow) {
    DataMatrix x;
    x.values = Matrix(4, 2);
    x.values << 0.0, 0.0, 0.1, 5.0, 0.3, -5.0, 1.0, 0.0;
    x.names = DataMatrix::default_names(2);
    Vector x0(1);
    x0 << 0.1;
    std::vector<long> rows = slab_rows(x, {0}, x0, 0.25);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], 0);
    EXPECT_EQ(rows[1], 1);
    EXPECT_EQ(rows[2], 2);
}
