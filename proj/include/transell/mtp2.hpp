#pragma once

// MTP2 feasibility of elliptical densities from the density generator:
// the fixed-scale criterion (ratio window [-r/(1+r), r/(1-r)] with r the
// minimum partial correlation), the dimension window (-1/d, 1/(d-2)), and a
// finite-difference log-supermodularity oracle for cross-checks.

#include <gsl/gsl_sf_bessel.h>

#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "transell/diagnostics.hpp"
#include "transell/errors.hpp"
#include "transell/matrix.hpp"
#include "transell/rng.hpp"

namespace transell {

/// Log density generator phi(t) = log phi_d(t) with derivatives. Builtins
/// carry the exact ratio range of t phi''/phi' as closed-interval endpoints;
/// user-supplied generators fall back to the probe grid (numerical, not a
/// proof).
struct DensityGenerator {
    std::string name;
    std::function<double(double)> log_phi;
    std::function<double(double)> phi_prime;
    std::function<double(double)> phi_second;
    double t_min = 1e-6;
    double t_max = 1e6;
    bool dim_dependent = false;
    int dim = 0;  // meaningful when dim_dependent
    bool has_closed_range = false;
    double closed_inf = 0.0;
    double closed_sup = 0.0;
    std::function<DensityGenerator(int)> at_dim;  // rebuild for another dimension
};

inline DensityGenerator gaussian_generator() {
    DensityGenerator g;
    g.name = "gaussian";
    g.log_phi = [](double t) { return -0.5 * t; };
    g.phi_prime = [](double) { return -0.5; };
    g.phi_second = [](double) { return 0.0; };
    g.has_closed_range = true;
    g.closed_inf = 0.0;
    g.closed_sup = 0.0;
    return g;
}

inline DensityGenerator student_t_generator(double k, int d) {
    if (!(k > 0.0)) throw SpecParseError("t generator needs k > 0");
    if (d < 1) throw SpecParseError("t generator needs d >= 1");
    DensityGenerator g;
    g.name = "t(" + std::to_string(k) + ")";
    double e = 0.5 * (k + double(d));
    g.log_phi = [e, k](double t) { return -e * std::log1p(t / k); };
    g.phi_prime = [e, k](double t) { return -e / (k + t); };
    g.phi_second = [e, k](double t) { return e / ((k + t) * (k + t)); };
    g.dim_dependent = true;
    g.dim = d;
    g.has_closed_range = true;  // ratio -t/(k+t) over t > 0, closure
    g.closed_inf = -1.0;
    g.closed_sup = 0.0;
    g.at_dim = [k](int dd) { return student_t_generator(k, dd); };
    return g;
}

inline DensityGenerator kotz_generator(double alpha) {
    if (!(alpha > 0.0)) throw SpecParseError("kotz generator needs alpha > 0");
    DensityGenerator g;
    g.name = "kotz(" + std::to_string(alpha) + ")";
    g.log_phi = [alpha](double t) { return -std::pow(t, alpha); };
    g.phi_prime = [alpha](double t) { return -alpha * std::pow(t, alpha - 1.0); };
    g.phi_second = [alpha](double t) {
        return -alpha * (alpha - 1.0) * std::pow(t, alpha - 2.0);
    };
    g.has_closed_range = true;  // ratio constant alpha - 1
    g.closed_inf = alpha - 1.0;
    g.closed_sup = alpha - 1.0;
    return g;
}

inline DensityGenerator logistic_generator() {
    DensityGenerator g;
    g.name = "logistic";
    g.log_phi = [](double t) { return -t - 2.0 * std::log1p(std::exp(-t)); };
    g.phi_prime = [](double t) { return -std::tanh(0.5 * t); };
    g.phi_second = [](double t) {
        double c = std::cosh(0.5 * t);
        return -0.5 / (c * c);
    };
    g.has_closed_range = true;  // ratio t/sinh(t) on (0, inf), closure [0, 1]
    g.closed_inf = 0.0;
    g.closed_sup = 1.0;
    return g;
}

namespace detail {

/// r(x) = K'_nu(x)/K_nu(x) and its derivative, from log-scaled Bessel K.
struct BesselRatio {
    double r;
    double r_prime;
};

inline BesselRatio bessel_k_log_ratio(double nu, double x) {
    gsl_sf_result lo, mid, hi;
    if (gsl_sf_bessel_lnKnu_e(std::fabs(nu - 1.0), x, &lo) != 0 ||
        gsl_sf_bessel_lnKnu_e(std::fabs(nu), x, &mid) != 0 ||
        gsl_sf_bessel_lnKnu_e(std::fabs(nu + 1.0), x, &hi) != 0)
        throw Error("Bessel K evaluation failed at x=" + std::to_string(x));
    double r = -0.5 * (std::exp(lo.val - mid.val) + std::exp(hi.val - mid.val));
    double r_prime = 1.0 + nu * nu / (x * x) - r / x - r * r;
    return {r, r_prime};
}

}  // namespace detail

/// Multivariate Laplace generator: phi_d(t) = (t/2)^{nu/2} K_nu(sqrt(2t))
/// with nu = (2 - d)/2. Derivatives go through the Bessel log-derivative
/// identities; no closed ratio range, so verdicts use the probe grid.
inline DensityGenerator laplace_generator(int d) {
    if (d < 1) throw SpecParseError("laplace generator needs d >= 1");
    DensityGenerator g;
    g.name = "laplace";
    const double nu = 0.5 * (2.0 - double(d));
    g.log_phi = [nu](double t) {
        double x = std::sqrt(2.0 * t);
        gsl_sf_result res;
        if (gsl_sf_bessel_lnKnu_e(std::fabs(nu), x, &res) != 0)
            throw Error("Bessel K evaluation failed at t=" + std::to_string(t));
        return 0.5 * nu * std::log(0.5 * t) + res.val;
    };
    g.phi_prime = [nu](double t) {
        double x = std::sqrt(2.0 * t);
        auto b = detail::bessel_k_log_ratio(nu, x);
        return 0.5 * nu / t + b.r / x;
    };
    g.phi_second = [nu](double t) {
        double x = std::sqrt(2.0 * t);
        auto b = detail::bessel_k_log_ratio(nu, x);
        return -0.5 * nu / (t * t) + b.r_prime / (x * x) - b.r / (x * x * x);
    };
    g.dim_dependent = true;
    g.dim = d;
    g.at_dim = [](int dd) { return laplace_generator(dd); };
    return g;
}

/// Registry used by the CLI: gaussian | t(k) | kotz(alpha) | logistic | laplace.
inline DensityGenerator parse_generator(const std::string& text, int d) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s == "gaussian") return gaussian_generator();
    if (s == "logistic") return logistic_generator();
    if (s == "laplace") return laplace_generator(d);
    auto param_of = [&](const std::string& head, const std::string& key) -> double {
        std::string inner = s.substr(head.size() + 1, s.size() - head.size() - 2);
        if (inner.rfind(key + "=", 0) == 0) inner = inner.substr(key.size() + 1);
        std::size_t used = 0;
        double v = std::stod(inner, &used);
        if (used != inner.size()) throw SpecParseError("bad parameter in generator: " + text);
        return v;
    };
    try {
        if (s.rfind("t(", 0) == 0 && s.back() == ')')
            return student_t_generator(param_of("t", "k"), d);
        if (s.rfind("kotz(", 0) == 0 && s.back() == ')')
            return kotz_generator(param_of("kotz", "alpha"));
    } catch (const SpecParseError&) {
        throw;
    } catch (const std::exception&) {
        throw SpecParseError("bad parameter in generator: " + text);
    }
    throw SpecParseError("unknown generator: " + text);
}

/// Grid min/max of t phi''/phi' over {phi' < -1e-14}, with the decreasing-
/// generator side conditions enforced: phi' > 1e-12 anywhere is a violation,
/// and near-zero phi' requires |phi''| <= 1e-12.
inline std::pair<double, double> generator_ratio_range(const DensityGenerator& g,
                                                       int grid_n = 10000) {
    if (grid_n < 100) throw Error("generator_ratio_range needs grid_n >= 100");
    double inf = std::numeric_limits<double>::infinity();
    double sup = -inf;
    bool any = false;
    const double log_lo = std::log(g.t_min), log_hi = std::log(g.t_max);
    for (int i = 0; i < grid_n; ++i) {
        double t = std::exp(log_lo + (log_hi - log_lo) * double(i) / double(grid_n - 1));
        double p = g.phi_prime(t);
        if (!std::isfinite(p) || p > 1e-12) throw GeneratorViolation(t);
        if (p >= -1e-14) {
            if (std::abs(g.phi_second(t)) > 1e-12) throw GeneratorViolation(t);
            continue;
        }
        double ratio = t * g.phi_second(t) / p;
        inf = std::min(inf, ratio);
        sup = std::max(sup, ratio);
        any = true;
    }
    if (!any) throw GeneratorViolation(g.t_min);
    return {inf, sup};
}

namespace detail {

/// Exact closure for builtins, probe grid otherwise; always validates.
inline std::pair<double, double> effective_ratio_range(const DensityGenerator& g, int grid_n) {
    auto grid = generator_ratio_range(g, grid_n);
    if (g.has_closed_range) return {g.closed_inf, g.closed_sup};
    return grid;
}

}  // namespace detail

struct RhoStarBounds {
    bool empty = true;
    double lo = 0.0;  // admissible minimum partial correlation in [lo, 1)
};

struct DimBound {
    enum class Kind { None, Finite, AllDims } kind = Kind::None;
    int value = 0;  // largest feasible d when Finite (1024 means "at least 1024")
};

struct Mtp2Verdict {
    std::string mode;  // "fixed-scale" or "dimension-window"
    bool feasible = false;
    double ratio_inf = 0.0;
    double ratio_sup = 0.0;
    double rho_star = std::numeric_limits<double>::quiet_NaN();
    RhoStarBounds rho_star_bounds;
    DimBound dim_bound;
    bool boundary_marginal = false;  // a bound was decided within 1e-10
    std::string note;
};

namespace detail {

// Comparisons at window boundaries absorb representation noise: closed
// bounds widen by kBoundaryEps (mathematical equality passes), open bounds
// shrink by it (mathematical equality fails). Cases inside the 1e-10 band
// additionally carry the boundary_marginal flag.
constexpr double kBoundaryEps = 1e-12;

inline RhoStarBounds admissible_rho_star(double inf, double sup) {
    RhoStarBounds b;
    if (!(inf > -0.5)) return b;  // no rho_* < 1 can satisfy -r/(1+r) <= inf
    double lo = 0.0;
    if (inf < 0.0) lo = std::max(lo, -inf / (1.0 + inf));
    if (sup > 0.0) lo = std::max(lo, sup / (1.0 + sup));
    if (lo >= 1.0) return b;
    b.empty = false;
    b.lo = lo;
    return b;
}

inline DimBound scan_dimension_bound(const DensityGenerator& g, int grid_n) {
    auto window_ok = [](double inf, double sup, int d) {
        double lo = -1.0 / double(d);
        bool upper = (d == 2) ? true : (sup < 1.0 / double(d - 2) - kBoundaryEps);
        return inf > lo + kBoundaryEps && upper;
    };
    DimBound out;
    std::pair<double, double> fixed_range{0.0, 0.0};
    if (!g.dim_dependent) fixed_range = effective_ratio_range(g, grid_n);
    for (int d = 2; d <= 1024; ++d) {
        auto r = fixed_range;
        if (g.dim_dependent) {
            DensityGenerator gd = g.at_dim ? g.at_dim(d) : g;
            r = effective_ratio_range(gd, grid_n);
        }
        if (!window_ok(r.first, r.second, d)) break;  // windows are nested in d
        out.kind = DimBound::Kind::Finite;
        out.value = d;
        if (std::abs(r.first) <= 1e-12 && std::abs(r.second) <= 1e-12) {
            out.kind = DimBound::Kind::AllDims;
            return out;
        }
    }
    return out;
}

}  // namespace detail

inline Mtp2Verdict mtp2_check_fixed_scale(const DensityGenerator& g, const SpdMatrix& k,
                                          int grid_n = 10000) {
    const int d = k.dim();
    if (d < 2) throw Error("mtp2_check_fixed_scale needs d >= 2");
    DensityGenerator gen = (g.dim_dependent && g.at_dim && g.dim != d) ? g.at_dim(d) : g;
    auto [inf, sup] = detail::effective_ratio_range(gen, grid_n);

    Matrix pc = partial_correlations(k);
    double rho_star = 1.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j) rho_star = std::min(rho_star, pc(i, j));

    Mtp2Verdict v;
    v.mode = "fixed-scale";
    v.ratio_inf = inf;
    v.ratio_sup = sup;
    v.rho_star = rho_star;
    v.rho_star_bounds = detail::admissible_rho_star(inf, sup);
    v.dim_bound = detail::scan_dimension_bound(gen, grid_n);

    if (rho_star < -1e-12) {
        v.feasible = false;
        v.note = "negative partial correlation; necessary condition fails";
        return v;
    }
    rho_star = std::max(rho_star, 0.0);
    double lo = -rho_star / (1.0 + rho_star);
    double hi = rho_star < 1.0 ? rho_star / (1.0 - rho_star)
                               : std::numeric_limits<double>::infinity();
    v.feasible = (inf > -0.5 + detail::kBoundaryEps) && (inf >= lo - detail::kBoundaryEps) &&
                 (sup <= hi + detail::kBoundaryEps);
    v.boundary_marginal = std::abs(inf - lo) <= 1e-10 || std::abs(inf + 0.5) <= 1e-10 ||
                          (std::isfinite(hi) && std::abs(sup - hi) <= 1e-10);
    return v;
}

inline Mtp2Verdict mtp2_dimension_window(const DensityGenerator& g, int d, int grid_n = 10000) {
    if (d < 2) throw Error("mtp2_dimension_window needs d >= 2");
    DensityGenerator gen = (g.dim_dependent && g.at_dim && g.dim != d) ? g.at_dim(d) : g;
    auto [inf, sup] = detail::effective_ratio_range(gen, grid_n);

    Mtp2Verdict v;
    v.mode = "dimension-window";
    v.ratio_inf = inf;
    v.ratio_sup = sup;
    v.rho_star_bounds = detail::admissible_rho_star(inf, sup);
    v.dim_bound = detail::scan_dimension_bound(gen, grid_n);

    double lo = -1.0 / double(d);
    double hi = (d == 2) ? std::numeric_limits<double>::infinity() : 1.0 / double(d - 2);
    v.feasible =
        inf > lo + detail::kBoundaryEps && (d == 2 || sup < hi - detail::kBoundaryEps);
    v.boundary_marginal =
        std::abs(inf - lo) <= 1e-10 || (std::isfinite(hi) && std::abs(sup - hi) <= 1e-10);
    return v;
}

struct SupermodularityResult {
    bool ok = true;
    double worst_value = 0.0;  // most negative mixed difference seen
    Vector worst_point;
    int worst_i = -1;
    int worst_j = -1;
    long checked = 0;
    long skipped = 0;  // grid points dropped for underflow / non-finite probes
};

/// Central mixed second differences of log phi_d(x'Kx) at every grid point
/// and coordinate pair; a difference below -1e-6 refutes MTP2.
inline SupermodularityResult supermodularity_oracle(const DensityGenerator& g, const SpdMatrix& k,
                                                    const std::vector<Vector>& grid,
                                                    double step = 1e-3) {
    const int d = k.dim();
    if (d > 4) throw DimensionTooLarge("supermodularity_oracle supports d <= 4");
    if (grid.size() > 100000) throw Error("supermodularity grid limited to 1e5 points");
    DensityGenerator gen = (g.dim_dependent && g.at_dim && g.dim != d) ? g.at_dim(d) : g;

    const double kLogFloor = std::log(1e-300);
    auto log_density = [&](const Vector& x) {
        double t = x.dot(k.mat() * x);
        if (t <= 0.0) return std::numeric_limits<double>::quiet_NaN();
        double v = gen.log_phi(t);
        if (!std::isfinite(v) || v < kLogFloor)
            return std::numeric_limits<double>::quiet_NaN();
        return v;
    };

    SupermodularityResult res;
    res.worst_value = std::numeric_limits<double>::infinity();
    Vector p(d);
    for (const Vector& x : grid) {
        if (x.size() != d) throw Error("grid point dimension mismatch");
        for (int c = 0; c < d; ++c)
            if (std::abs(x[c]) > 3.0 + 1e-9) throw Error("grid point outside [-3,3]^d");
        bool skipped_point = false;
        for (int i = 0; i < d && !skipped_point; ++i) {
            for (int j = i + 1; j < d && !skipped_point; ++j) {
                double f[4];
                int s = 0;
                for (int si = -1; si <= 1; si += 2)
                    for (int sj = -1; sj <= 1; sj += 2) {
                        p = x;
                        p[i] += si * step;
                        p[j] += sj * step;
                        f[s++] = log_density(p);
                    }
                if (std::isnan(f[0]) || std::isnan(f[1]) || std::isnan(f[2]) ||
                    std::isnan(f[3])) {
                    skipped_point = true;
                    break;
                }
                double mixed = (f[3] - f[2] - f[1] + f[0]) / (4.0 * step * step);
                if (mixed < res.worst_value) {
                    res.worst_value = mixed;
                    res.worst_point = x;
                    res.worst_i = i;
                    res.worst_j = j;
                }
                if (mixed < -1e-6) res.ok = false;
            }
        }
        if (skipped_point)
            ++res.skipped;
        else
            ++res.checked;
    }
    if (res.checked == 0) throw DensityUnderflow("every supermodularity grid point underflowed");
    return res;
}

/// Even lattice over [-3,3]^d avoiding exact zeros (per_dim even).
inline std::vector<Vector> lattice_grid(int d, int per_dim) {
    if (per_dim < 2 || per_dim % 2 != 0) throw Error("lattice_grid needs an even per_dim >= 2");
    std::vector<Vector> pts;
    long total = 1;
    for (int i = 0; i < d; ++i) total *= per_dim;
    if (total > 100000) throw Error("lattice too large");
    Vector x(d);
    std::vector<int> idx(d, 0);
    for (long n = 0; n < total; ++n) {
        long rem = n;
        for (int c = 0; c < d; ++c) {
            idx[c] = rem % per_dim;
            rem /= per_dim;
        }
        for (int c = 0; c < d; ++c) x[c] = -3.0 + 6.0 * (double(idx[c]) + 0.5) / double(per_dim);
        pts.push_back(x);
    }
    return pts;
}

inline std::vector<Vector> random_grid(int d, long count, std::uint64_t seed) {
    if (count > 100000) throw Error("grid limited to 1e5 points");
    Rng rng(seed);
    std::vector<Vector> pts;
    pts.reserve(count);
    Vector x(d);
    for (long n = 0; n < count; ++n) {
        for (int c = 0; c < d; ++c) x[c] = -3.0 + 6.0 * rng.uniform();
        pts.push_back(x);
    }
    return pts;
}

}  // namespace transell
