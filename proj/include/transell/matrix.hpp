#pragma once

// Dense symmetric kernels shared by every estimator: Cholesky, inversion,
// log-determinant, Schur complements, projection onto the correlation cone,
// and the M-matrix certificate.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "transell/errors.hpp"

namespace transell {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexSet = std::vector<int>;

inline Matrix symmetrized(const Matrix& a) {
    if (a.rows() != a.cols()) throw Error("matrix is not square");
    return 0.5 * (a + a.transpose());
}

class SpdMatrix;
inline SpdMatrix cholesky(const Matrix& a);

/// Positive-definite matrix together with its lower Cholesky factor.
/// Immutable after construction; safe to share across threads.
class SpdMatrix {
  public:
    SpdMatrix() = default;

    const Matrix& mat() const { return a_; }
    const Matrix& chol() const { return l_; }
    int dim() const { return static_cast<int>(a_.rows()); }

    double log_det() const {
        return 2.0 * l_.diagonal().array().log().sum();
    }

    /// A^{-1} b through the cached factor.
    Matrix solve(const Matrix& b) const {
        Matrix y = l_.triangularView<Eigen::Lower>().solve(b);
        return l_.transpose().triangularView<Eigen::Upper>().solve(y);
    }

    SpdMatrix inverse() const {
        Matrix inv = solve(Matrix::Identity(dim(), dim()));
        return cholesky(symmetrized(inv));
    }

  private:
    friend SpdMatrix cholesky(const Matrix&);
    Matrix a_, l_;
};

/// Left-looking Cholesky with a scale-relative pivot floor: a pivot
/// <= 1e-12 * max diagonal aborts with the offending index.
inline SpdMatrix cholesky(const Matrix& a_in) {
    Matrix a = symmetrized(a_in);
    const int d = static_cast<int>(a.rows());
    const double maxdiag = d > 0 ? a.diagonal().maxCoeff() : 0.0;
    const double floor = 1e-12 * std::max(maxdiag, 0.0);
    Matrix l = Matrix::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        double pivot = a(j, j) - l.row(j).head(j).squaredNorm();
        if (!(pivot > floor)) throw NotPositiveDefinite(static_cast<std::size_t>(j));
        l(j, j) = std::sqrt(pivot);
        for (int i = j + 1; i < d; ++i) {
            double v = a(i, j) - l.row(i).head(j).dot(l.row(j).head(j));
            l(i, j) = v / l(j, j);
        }
    }
    SpdMatrix out;
    out.a_ = std::move(a);
    out.l_ = std::move(l);
    return out;
}

inline double log_det(const SpdMatrix& a) { return a.log_det(); }

inline SpdMatrix inverse(const SpdMatrix& a) { return a.inverse(); }

inline Matrix submatrix(const Matrix& a, const IndexSet& rows, const IndexSet& cols) {
    Matrix out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = a(rows[i], cols[j]);
    return out;
}

inline void check_index_set(const IndexSet& s, int d, const char* what) {
    for (int i : s)
        if (i < 0 || i >= d) throw IndexOutOfRange(std::string(what) + " index out of range");
}

/// Sigma_{II.J} = Sigma_II - Sigma_IJ Sigma_JJ^{-1} Sigma_JI.
/// With J the complement of I this equals (K_II)^{-1} for K = Sigma^{-1}.
inline SpdMatrix schur_complement(const SpdMatrix& a, const IndexSet& keep, const IndexSet& out) {
    const int d = a.dim();
    check_index_set(keep, d, "keep");
    check_index_set(out, d, "out");
    for (int i : keep)
        if (std::find(out.begin(), out.end(), i) != out.end())
            throw IndexOutOfRange("keep and out sets overlap");
    Matrix aII = submatrix(a.mat(), keep, keep);
    if (out.empty()) return cholesky(aII);
    Matrix aJJ = submatrix(a.mat(), out, out);
    Matrix aJI = submatrix(a.mat(), out, keep);
    SpdMatrix jj = cholesky(aJJ);  // NotPositiveDefinite of the J block propagates
    Matrix x = jj.chol().triangularView<Eigen::Lower>().solve(aJI);
    return cholesky(aII - x.transpose() * x);
}

/// One-shot eigenvalue clip at eps followed by a diagonal rescale back to unit
/// diagonal. Intended for inputs near the correlation cone (sin-transformed
/// Kendall matrices); not an alternating-projections nearest point.
inline SpdMatrix nearest_correlation(const Matrix& a_in, double eps = 1e-8) {
    Matrix a = symmetrized(a_in);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    Vector vals = eig.eigenvalues().cwiseMax(eps);
    Matrix b = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
    Vector scale = b.diagonal().array().sqrt().inverse();
    Matrix c = scale.asDiagonal() * b * scale.asDiagonal();
    c.diagonal().setOnes();
    return cholesky(symmetrized(c));
}

struct MMatrixCert {
    bool is_m_matrix;
    double max_offdiag;  // largest off-diagonal entry of K
};

/// K is an M-matrix when every off-diagonal entry is <= tol_offdiag; the
/// default separates solver noise from structurally positive entries.
inline MMatrixCert m_matrix_certificate(const Matrix& k, double tol_offdiag = 1e-9) {
    const int d = static_cast<int>(k.rows());
    double max_off = 0.0;
    bool has_off = false;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            if (!has_off || k(i, j) > max_off) max_off = k(i, j);
            has_off = true;
        }
    if (!has_off) max_off = 0.0;
    return MMatrixCert{max_off <= tol_offdiag, max_off};
}

/// Rescale a covariance to a correlation matrix (unit diagonal).
inline Matrix correlation_rescale(const Matrix& s) {
    Vector inv_sd = s.diagonal().array().sqrt().inverse();
    Matrix c = inv_sd.asDiagonal() * s * inv_sd.asDiagonal();
    c.diagonal().setOnes();
    return symmetrized(c);
}

}  // namespace transell
