#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "transell/errors.hpp"
#include "transell/matrix.hpp"

namespace transell {

/// n x d observation matrix with column names.
struct DataMatrix {
    Matrix values;
    std::vector<std::string> names;

    long n() const { return values.rows(); }
    int d() const { return static_cast<int>(values.cols()); }

    static std::vector<std::string> default_names(int d) {
        std::vector<std::string> out;
        out.reserve(d);
        for (int j = 0; j < d; ++j) out.push_back("x" + std::to_string(j + 1));
        return out;
    }
};

/// Center each column; scale to unit (denominator n-1) standard deviation.
inline Matrix standardized_columns(const Matrix& x) {
    const long n = x.rows();
    if (n < 2) throw InsufficientSample("standardization needs n >= 2");
    Matrix out = x;
    for (int j = 0; j < x.cols(); ++j) {
        double mean = out.col(j).mean();
        out.col(j).array() -= mean;
        double sd = std::sqrt(out.col(j).squaredNorm() / double(n - 1));
        if (!(sd > 0.0)) throw DegenerateColumn(static_cast<std::size_t>(j));
        out.col(j) /= sd;
    }
    return out;
}

/// Sample Pearson correlation matrix.
inline Matrix pearson_correlation(const Matrix& x) {
    Matrix z = standardized_columns(x);
    Matrix c = (z.transpose() * z) / double(x.rows() - 1);
    c.diagonal().setOnes();
    return symmetrized(c);
}

inline double sample_corr(const Vector& a, const Vector& b) {
    const long n = a.size();
    double ma = a.mean(), mb = b.mean();
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (long i = 0; i < n; ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw DegenerateColumn(0);
    return sab / std::sqrt(saa * sbb);
}

}  // namespace transell
