#pragma once

// Batch pipeline behind the CLI: CSV in, scatter estimation (Pearson or
// SKEPTIC), glasso-EBIC and/or M-matrix MLE, artifact and report emission,
// plus the simulator and the MTP2 analyzer front-ends.

#include <cctype>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "transell/csv.hpp"
#include "transell/diagnostics.hpp"
#include "transell/errors.hpp"
#include "transell/glasso.hpp"
#include "transell/graph.hpp"
#include "transell/kendall.hpp"
#include "transell/mtp2.hpp"
#include "transell/positive_mle.hpp"
#include "transell/sampling.hpp"

namespace transell {

struct PipelineConfig {
    std::string input;
    std::string method = "skeptic";    // pearson | skeptic
    std::string estimator = "both";    // glasso | ppg | both
    int lambda_points = 30;
    double gamma = 0.5;
    double threshold = 1e-8;
    std::uint64_t seed = 0;  // reserved; fit itself is deterministic
    std::string out_dir = "out";
    bool report_tail = true;
    bool report_mahalanobis = true;
    bool report_audit = true;

    void validate() const {
        if (method != "pearson" && method != "skeptic")
            throw SpecParseError("method must be pearson or skeptic");
        if (estimator != "glasso" && estimator != "ppg" && estimator != "both")
            throw SpecParseError("estimator must be glasso, ppg, or both");
        if (lambda_points < 2) throw SpecParseError("lambda-points must be >= 2");
        if (gamma < 0.0 || gamma > 1.0) throw SpecParseError("gamma must be in [0,1]");
        if (threshold < 0.0) throw SpecParseError("threshold must be >= 0");
    }
};

// ---------------------------------------------------------------------------
// Family grammar: name(key=value,...) with keys d, k, rho, structure
// (equi|chain), transforms (none|cubic|exp). Names: gaussian, t, laplace.
// ---------------------------------------------------------------------------

struct FamilySpec {
    std::string name;
    int d = 2;
    double k = 0.0;  // t degrees of freedom
    double rho = 0.0;
    std::string structure = "equi";
    std::string transforms = "none";
    TransellipticalSpec spec;
};

namespace detail {

inline std::map<std::string, std::string> parse_kv_list(const std::string& inner,
                                                        const std::string& ctx) {
    std::map<std::string, std::string> kv;
    if (inner.empty()) return kv;
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 >= item.size())
            throw SpecParseError(ctx + ": expected key=value, got '" + item + "'");
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return kv;
}

inline double to_real(const std::string& v, const std::string& ctx) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        throw SpecParseError(ctx + ": bad number '" + v + "'");
    }
    if (used != v.size()) throw SpecParseError(ctx + ": bad number '" + v + "'");
    return out;
}

inline Matrix equicorrelation_sigma(int d, double rho) {
    if (d > 1 && (rho <= -1.0 / double(d - 1) || rho >= 1.0))
        throw SpecParseError("equicorrelation rho out of range for d=" + std::to_string(d));
    Matrix s = Matrix::Constant(d, d, rho);
    s.diagonal().setOnes();
    return s;
}

inline Matrix chain_sigma(int d, double rho) {
    Matrix k = Matrix::Identity(d, d);
    for (int i = 0; i + 1 < d; ++i) {
        k(i, i + 1) = -rho;
        k(i + 1, i) = -rho;
    }
    return cholesky(k).inverse().mat();  // throws if the chain precision is not PD
}

}  // namespace detail

inline FamilySpec parse_family(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    FamilySpec f;
    auto open = s.find('(');
    std::map<std::string, std::string> kv;
    if (open == std::string::npos) {
        f.name = s;
    } else {
        if (s.back() != ')') throw SpecParseError("family: missing ')' in '" + text + "'");
        f.name = s.substr(0, open);
        kv = detail::parse_kv_list(s.substr(open + 1, s.size() - open - 2), "family");
    }
    if (f.name != "gaussian" && f.name != "t" && f.name != "laplace")
        throw SpecParseError("unknown family: '" + f.name + "' (use gaussian, t, laplace)");

    for (const auto& [key, val] : kv) {
        if (key == "d") {
            double dv = detail::to_real(val, "family d");
            f.d = static_cast<int>(dv);
            if (f.d < 1 || double(f.d) != dv) throw SpecParseError("family: d must be a positive integer");
        } else if (key == "k") {
            f.k = detail::to_real(val, "family k");
        } else if (key == "rho") {
            f.rho = detail::to_real(val, "family rho");
        } else if (key == "structure") {
            f.structure = val;
        } else if (key == "transforms") {
            f.transforms = val;
        } else {
            throw SpecParseError("family: unknown key '" + key + "'");
        }
    }
    if (f.name == "t" && !(f.k > 0.0)) throw SpecParseError("family t needs k > 0");
    if (f.structure != "equi" && f.structure != "chain")
        throw SpecParseError("family structure must be equi or chain");
    if (f.transforms != "none" && f.transforms != "cubic" && f.transforms != "exp")
        throw SpecParseError("family transforms must be none, cubic, or exp");

    Matrix sigma;
    try {
        sigma = (f.structure == "chain") ? detail::chain_sigma(f.d, f.rho)
                                         : detail::equicorrelation_sigma(f.d, f.rho);
    } catch (const NotPositiveDefinite&) {
        throw SpecParseError("family: scale matrix not positive definite at rho=" +
                             std::to_string(f.rho));
    }

    MixingLaw mixing = MixingLaw::constant(1.0);
    if (f.name == "t") mixing = MixingLaw::chisq_over_k(f.k);
    if (f.name == "laplace") mixing = MixingLaw::exponential(1.0);

    f.spec.base = make_elliptical(Vector::Zero(f.d), sigma, mixing);
    Transform tr = identity_transform();
    if (f.transforms == "cubic") tr = cubic_transform();
    if (f.transforms == "exp") tr = exp_transform();
    f.spec.transforms.assign(f.d, tr);
    return f;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

namespace detail {

struct EstimatorRun {
    GraphArtifact artifact;
    SpdMatrix precision;
    SpdMatrix covariance;
};

inline EstimatorRun run_glasso(const Matrix& s, long n, const PipelineConfig& cfg,
                               const std::string& method) {
    auto path = lambda_path(s, cfg.lambda_points);
    auto [fit, score] = select_model(s, n, path, cfg.gamma);
    EstimatorRun run;
    run.precision = fit.precision;
    run.covariance = fit.covariance;
    run.artifact.dim = static_cast<int>(s.rows());
    run.artifact.method = method;
    run.artifact.estimator = "glasso";
    run.artifact.lambda = fit.lambda;
    run.artifact.graph = precision_graph(fit.precision, cfg.threshold);
    run.artifact.loglik = score.loglik;
    run.artifact.ebic = score.score;
    run.artifact.m_matrix = m_matrix_certificate(fit.precision.mat()).is_m_matrix;
    return run;
}

inline EstimatorRun run_ppg(const Matrix& s, long n, const PipelineConfig& cfg,
                            const std::string& method) {
    PpgFit fit = ppg_fit(s);
    EstimatorRun run;
    run.precision = fit.precision;
    run.covariance = fit.covariance;
    run.artifact.dim = static_cast<int>(s.rows());
    run.artifact.method = method;
    run.artifact.estimator = "ppg";
    run.artifact.graph = ppg_graph(fit, cfg.threshold);
    run.artifact.loglik = fit.loglik;
    run.artifact.ebic = ebic(fit.loglik, static_cast<long>(run.artifact.graph.edges.size()), n,
                             static_cast<int>(s.rows()), cfg.gamma)
                            .score;
    run.artifact.m_matrix = m_matrix_certificate(fit.precision.mat()).is_m_matrix;
    return run;
}

}  // namespace detail

/// Full fit pipeline; throws typed errors (the CLI maps them to exit codes).
inline void run_fit(const PipelineConfig& cfg, std::ostream& log) {
    cfg.validate();
    DataMatrix x = read_csv(cfg.input);
    const long n = x.n();
    const int d = x.d();
    if (n < 3) throw CsvParseError(cfg.input + ": need at least 3 rows, got " + std::to_string(n));
    if (d < 2)
        throw CsvParseError(cfg.input + ": need at least 2 columns, got " + std::to_string(d));

    Matrix s;
    if (cfg.method == "pearson") {
        s = pearson_correlation(x.values);
    } else {
        s = skeptic_correlation(kendall_matrix(x)).corr.mat();
    }

    std::filesystem::create_directories(cfg.out_dir);
    auto out_path = [&](const std::string& name) {
        return (std::filesystem::path(cfg.out_dir) / name).string();
    };

    std::vector<detail::EstimatorRun> runs;
    if (cfg.estimator == "glasso" || cfg.estimator == "both")
        runs.push_back(detail::run_glasso(s, n, cfg, cfg.method));
    if (cfg.estimator == "ppg" || cfg.estimator == "both")
        runs.push_back(detail::run_ppg(s, n, cfg, cfg.method));

    std::ostringstream rep;
    rep << "transell fit report\n";
    rep << "input: " << cfg.input << " (n=" << n << ", d=" << d << ")\n";
    rep << "method: " << cfg.method << "\n\n";

    for (const auto& run : runs) {
        const std::string& est = run.artifact.estimator;
        write_graph_json(out_path(est + "_graph.json"), run.artifact);
        write_graph_dot(out_path(est + "_graph.dot"), run.artifact.graph);
        write_matrix_csv(out_path(est + "_precision.csv"), run.precision.mat(), x.names);

        rep << "estimator: " << est << "\n";
        if (run.artifact.lambda)
            rep << "  lambda: " << detail::format_real(*run.artifact.lambda) << "\n";
        rep << "  edges: " << run.artifact.graph.edges.size() << "\n";
        rep << "  loglik: " << detail::format_real(run.artifact.loglik) << "\n";
        rep << "  ebic: " << detail::format_real(run.artifact.ebic) << "\n";
        rep << "  m_matrix: " << (run.artifact.m_matrix ? "yes" : "no") << "\n\n";
    }

    if (runs.size() == 2) {
        rep << "comparison (same scatter input):\n";
        rep << "  estimator  edges  loglik  ebic\n";
        for (const auto& run : runs)
            rep << "  " << run.artifact.estimator << "  " << run.artifact.graph.edges.size()
                << "  " << detail::format_real(run.artifact.loglik) << "  "
                << detail::format_real(run.artifact.ebic) << "\n";
        rep << "\n";
    }

    if (cfg.report_tail) {
        for (const auto& run : runs) {
            try {
                TailDependenceReport t = tail_dependence_report(x, run.precision);
                rep << "tail dependence (" << run.artifact.estimator
                    << "): lambda_hat=" << detail::format_real(t.lambda_hat)
                    << " slope_hat=" << detail::format_real(t.slope_hat) << "\n";
            } catch (const Error& e) {
                rep << "tail dependence (" << run.artifact.estimator << "): skipped (" << e.what()
                    << ")\n";
            }
        }
        rep << "\n";
    }

    if (cfg.report_mahalanobis) {
        try {
            DataMatrix z;
            z.values = standardized_columns(x.values);
            z.names = x.names;
            MahalanobisReport m = mahalanobis_gof(z, cholesky(s));
            rep << "mahalanobis exceedance: frac95=" << detail::format_real(m.frac95)
                << " frac99=" << detail::format_real(m.frac99)
                << " (chi-square q95=" << detail::format_real(m.q95)
                << " q99=" << detail::format_real(m.q99) << ")\n\n";
        } catch (const Error& e) {
            rep << "mahalanobis: skipped (" << e.what() << ")\n\n";
        }
    }

    if (cfg.report_audit) {
        for (const auto& run : runs) {
            if (d > 12) {
                rep << "faithfulness audit: skipped (d > 12)\n";
                break;
            }
            FaithfulnessReport a = faithfulness_audit(run.covariance);
            rep << "faithfulness audit (" << run.artifact.estimator
                << "): inverse_m_matrix=" << (a.is_im ? "yes" : "no")
                << " sign_violations=" << a.sign_violations.size()
                << " propagation_violations=" << a.propagation_violations.size() << "\n";
        }
        rep << "\n";
    }

    std::ofstream repf(out_path("report.txt"), std::ios::binary);
    if (!repf) throw Error("cannot write report.txt");
    repf << rep.str();
    repf.close();
    log << rep.str();
}

inline int cmd_fit(const PipelineConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        run_fit(cfg, out);
        return 0;
    } catch (const CsvParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const SpecParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const NotConverged& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

inline int cmd_simulate(const std::string& family, long n, std::uint64_t seed,
                        const std::string& out_file, std::ostream& out, std::ostream& err) {
    try {
        FamilySpec f = parse_family(family);
        DataMatrix data = sample_transelliptical(f.spec, n, seed);
        write_csv(out_file, data);
        out << "wrote " << n << " rows, d=" << f.d << " to " << out_file << "\n";
        return 0;
    } catch (const SpecParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

// ---------------------------------------------------------------------------
// mtp2
// ---------------------------------------------------------------------------

namespace detail {

inline std::string dim_bound_text(const DimBound& b) {
    switch (b.kind) {
        case DimBound::Kind::AllDims:
            return "feasible for all d";
        case DimBound::Kind::Finite:
            return b.value >= 1024 ? "feasible up to at least d=1024"
                                   : "feasible up to d=" + std::to_string(b.value);
        default:
            return "none";
    }
}

inline std::string verdict_json_text(const std::string& generator, const Mtp2Verdict& v) {
    std::string s = "{\n";
    s += "  \"generator\": \"" + generator + "\",\n";
    s += "  \"mode\": \"" + v.mode + "\",\n";
    s += std::string("  \"feasible\": ") + (v.feasible ? "true" : "false") + ",\n";
    s += "  \"ratio_inf\": " + format_real(v.ratio_inf) + ",\n";
    s += "  \"ratio_sup\": " + format_real(v.ratio_sup) + ",\n";
    if (!std::isnan(v.rho_star)) s += "  \"rho_star\": " + format_real(v.rho_star) + ",\n";
    if (v.rho_star_bounds.empty)
        s += "  \"rho_star_bounds\": null,\n";
    else
        s += "  \"rho_star_bounds\": {\"lo\": " + format_real(v.rho_star_bounds.lo) +
             ", \"hi\": 1},\n";
    if (v.dim_bound.kind == DimBound::Kind::AllDims)
        s += "  \"dim_bound\": \"all\",\n";
    else if (v.dim_bound.kind == DimBound::Kind::Finite)
        s += "  \"dim_bound\": " + std::to_string(v.dim_bound.value) + ",\n";
    else
        s += "  \"dim_bound\": \"none\",\n";
    s += std::string("  \"boundary_marginal\": ") + (v.boundary_marginal ? "true" : "false");
    if (!v.note.empty()) s += ",\n  \"note\": \"" + v.note + "\"";
    s += "\n}\n";
    return s;
}

}  // namespace detail

inline int cmd_mtp2(const std::string& generator, int d, std::optional<double> rho_star,
                    bool as_json, std::ostream& out, std::ostream& err) {
    try {
        DensityGenerator g = parse_generator(generator, d);
        Mtp2Verdict v;
        if (rho_star) {
            if (*rho_star < 0.0 || *rho_star >= 1.0)
                throw SpecParseError("rho-star must lie in [0, 1)");
            Matrix k = -(*rho_star) * Matrix::Ones(d, d);
            k.diagonal().setConstant(1.0);
            SpdMatrix kp = cholesky(k);  // PD iff rho_star < 1/(d-1)
            v = mtp2_check_fixed_scale(g, kp);
        } else {
            v = mtp2_dimension_window(g, d);
        }

        if (as_json) {
            out << detail::verdict_json_text(generator, v);
            return 0;
        }
        out << "generator: " << g.name << "\n";
        out << "ratio range: [" << detail::format_real(v.ratio_inf) << ", "
            << detail::format_real(v.ratio_sup) << "]\n";
        if (v.rho_star_bounds.empty)
            out << "admissible rho_star: none (infeasible for all scale matrices)\n";
        else
            out << "admissible rho_star: [" << detail::format_real(v.rho_star_bounds.lo)
                << ", 1)\n";
        out << "dimension window: " << detail::dim_bound_text(v.dim_bound) << "\n";
        if (rho_star)
            out << "verdict (fixed scale, d=" << d << ", rho_star=" << detail::format_real(*rho_star)
                << "): " << (v.feasible ? "feasible" : "infeasible");
        else
            out << "verdict (dimension window, d=" << d
                << "): " << (v.feasible ? "feasible" : "infeasible");
        if (v.boundary_marginal) out << " [boundary case within 1e-10]";
        out << "\n";
        if (!v.note.empty()) out << "note: " << v.note << "\n";
        return 0;
    } catch (const SpecParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const NotPositiveDefinite& e) {
        err << "error: equicorrelation precision not positive definite (rho_star too large "
               "for d): "
            << e.what() << "\n";
        return 2;
    } catch (const GeneratorViolation& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace transell
