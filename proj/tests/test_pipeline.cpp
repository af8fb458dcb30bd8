#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "transell/transell.hpp"

using namespace transell;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::path(::testing::TempDir()) / ("transell_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Edge endpoints of a DOT body: lines "  i -- j [weight=...];".
std::set<std::pair<int, int>> dot_edges(const std::string& text) {
    std::set<std::pair<int, int>> edges;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        auto dash = line.find(" -- ");
        if (dash == std::string::npos) continue;
        int i = std::stoi(line.substr(0, dash));
        int j = std::stoi(line.substr(dash + 4));
        edges.insert({i, j});
    }
    return edges;
}

}  // namespace

TEST(Csv, RoundTripIsExact) {
    fs::path dir = fresh_dir("csv_roundtrip");
    DataMatrix m;
    m.values = Matrix(3, 3);
    m.values << 1.0 / 3.0, -2.5e-17, 9.007199254740993e15, 0.1, -1.0, 3.141592653589793,
        2.2250738585072014e-308, 1.7976931348623157e308, 0.0;
    m.names = {"alpha", "beta", "gamma"};
    std::string path = (dir / "m.csv").string();
    write_csv(path, m);
    DataMatrix back = read_csv(path);
    ASSERT_EQ(back.n(), 3);
    ASSERT_EQ(back.d(), 3);
    EXPECT_EQ(back.names, m.names);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_EQ(back.values(i, j), m.values(i, j));
}

TEST(Csv, HeaderlessFileGetsDefaultNames) {
    fs::path dir = fresh_dir("csv_headerless");
    write_text(dir / "raw.csv", "1.5,2\n3,4\n5,6\n");
    DataMatrix m = read_csv((dir / "raw.csv").string());
    ASSERT_EQ(m.n(), 3);
    EXPECT_EQ(m.names, DataMatrix::default_names(2));
    EXPECT_DOUBLE_EQ(m.values(0, 0), 1.5);
}

TEST(Csv, ErrorsNameRowAndColumn) {
    fs::path dir = fresh_dir("csv_errors");
    write_text(dir / "bad.csv", "a,b\n1,2\n3,oops\n");
    try {
        read_csv((dir / "bad.csv").string());
        FAIL() << "expected CsvParseError";
    } catch (const CsvParseError& e) {
        // rows are numbered as file lines, header included
        EXPECT_NE(std::string(e.what()).find("row 3, column 2"), std::string::npos) << e.what();
    }

    write_text(dir / "ragged.csv", "a,b\n1,2\n3\n");
    EXPECT_THROW(read_csv((dir / "ragged.csv").string()), CsvParseError);

    write_text(dir / "nan.csv", "a,b\n1,nan\n");
    EXPECT_THROW(read_csv((dir / "nan.csv").string()), CsvParseError);

    write_text(dir / "empty.csv", "");
    EXPECT_THROW(read_csv((dir / "empty.csv").string()), CsvParseError);

    EXPECT_THROW(read_csv((dir / "missing.csv").string()), CsvParseError);
}

TEST(ParseFamily, PopulatesSpecFields) {
    FamilySpec g = parse_family("gaussian(d=3,rho=0.5)");
    EXPECT_EQ(g.name, "gaussian");
    EXPECT_EQ(g.d, 3);
    EXPECT_EQ(g.spec.base.mixing.kind, MixingLaw::Kind::Constant);
    EXPECT_DOUBLE_EQ(g.spec.base.sigma.mat()(0, 1), 0.5);

    FamilySpec t = parse_family(" t(k=5, d=2, rho=0.3, transforms=cubic) ");
    EXPECT_EQ(t.spec.base.mixing.kind, MixingLaw::Kind::ChiSqOverK);
    EXPECT_DOUBLE_EQ(t.spec.base.mixing.value, 5.0);
    EXPECT_EQ(t.transforms, "cubic");

    FamilySpec l = parse_family("laplace(d=2,structure=chain,rho=0.4)");
    EXPECT_EQ(l.spec.base.mixing.kind, MixingLaw::Kind::Exponential);
    // Chain scale: precision has -rho on the first off-diagonal.
    Matrix k = cholesky(l.spec.base.sigma.mat()).inverse().mat();
    EXPECT_NEAR(k(0, 1), -0.4, 1e-9);
}

TEST(ParseFamily, RejectsBadSpecs) {
    EXPECT_THROW(parse_family("cauchy(d=2)"), SpecParseError);
    EXPECT_THROW(parse_family("t(d=2)"), SpecParseError);              // missing k
    EXPECT_THROW(parse_family("gaussian(d=0)"), SpecParseError);
    EXPECT_THROW(parse_family("gaussian(d=2.5)"), SpecParseError);
    EXPECT_THROW(parse_family("gaussian(d=2,rho=1.2)"), SpecParseError);
    EXPECT_THROW(parse_family("gaussian(d=2,structure=ring)"), SpecParseError);
    EXPECT_THROW(parse_family("gaussian(d=2,transforms=log)"), SpecParseError);
    EXPECT_THROW(parse_family("gaussian(d=2,color=red)"), SpecParseError);
    EXPECT_THROW(parse_family("gaussian(d=2"), SpecParseError);
    EXPECT_THROW(parse_family("gaussian(d=two)"), SpecParseError);
    EXPECT_THROW(parse_family("gaussian(d=4,structure=chain,rho=0.9)"), SpecParseError);
}

TEST(Simulate, DeterministicByteIdenticalRuns) {
    fs::path dir = fresh_dir("simulate");
    std::ostringstream out1, err1, out2, err2;
    std::string fam = "t(k=5,d=3,rho=0.5)";
    int rc1 = cmd_simulate(fam, 200, 9, (dir / "a.csv").string(), out1, err1);
    int rc2 = cmd_simulate(fam, 200, 9, (dir / "b.csv").string(), out2, err2);
    EXPECT_EQ(rc1, 0);
    EXPECT_EQ(rc2, 0);
    EXPECT_EQ(read_text(dir / "a.csv"), read_text(dir / "b.csv"));
    EXPECT_NE(out1.str().find("200 rows"), std::string::npos);

    int rc3 = cmd_simulate(fam, 200, 10, (dir / "c.csv").string(), out1, err1);
    EXPECT_EQ(rc3, 0);
    EXPECT_NE(read_text(dir / "a.csv"), read_text(dir / "c.csv"));
}

TEST(Simulate, BadFamilyExitsTwo) {
    fs::path dir = fresh_dir("simulate_bad");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_simulate("weibull(d=2)", 10, 1, (dir / "x.csv").string(), out, err), 2);
    EXPECT_NE(err.str().find("error:"), std::string::npos);
}

TEST(Fit, EndToEndArtifacts) {
    fs::path dir = fresh_dir("fit_e2e");
    std::ostringstream sout, serr;
    ASSERT_EQ(cmd_simulate("gaussian(d=4,structure=chain,rho=0.45)", 800, 21,
                           (dir / "data.csv").string(), sout, serr),
              0);

    PipelineConfig cfg;
    cfg.input = (dir / "data.csv").string();
    cfg.method = "pearson";
    cfg.estimator = "both";
    cfg.out_dir = (dir / "out").string();
    std::ostringstream fout, ferr;
    ASSERT_EQ(cmd_fit(cfg, fout, ferr), 0) << ferr.str();

    for (const char* name : {"glasso_graph.json", "glasso_graph.dot", "glasso_precision.csv",
                             "ppg_graph.json", "ppg_graph.dot", "ppg_precision.csv",
                             "report.txt"}) {
        EXPECT_TRUE(fs::exists(dir / "out" / name)) << name;
    }

    for (const std::string est : {"glasso", "ppg"}) {
        json j = json::parse(read_text(dir / "out" / (est + "_graph.json")));
        EXPECT_EQ(j["dim"], 4);
        EXPECT_EQ(j["method"], "pearson");
        EXPECT_EQ(j["estimator"], est);
        EXPECT_TRUE(j["loglik"].is_number());
        EXPECT_TRUE(j["ebic"].is_number());
        EXPECT_TRUE(j["m_matrix"].is_boolean());
        if (est == "glasso") {
            EXPECT_TRUE(j["lambda"].is_number());
        }
        if (est == "ppg") {
            EXPECT_TRUE(j["m_matrix"].get<bool>());
            EXPECT_FALSE(j.contains("lambda"));
        }
        std::set<std::pair<int, int>> json_edges;
        for (const auto& e : j["edges"]) {
            int i = e["i"], jj = e["j"];
            EXPECT_GE(i, 1);
            EXPECT_LT(i, jj);
            EXPECT_LE(jj, 4);
            double pc = e["partial_corr"];
            EXPECT_GT(pc, -1.0);
            EXPECT_LT(pc, 1.0);
            json_edges.insert({i, jj});
        }
        EXPECT_EQ(json_edges.size(), j["edges"].size());
        EXPECT_EQ(dot_edges(read_text(dir / "out" / (est + "_graph.dot"))), json_edges);

        DataMatrix prec = read_csv((dir / "out" / (est + "_precision.csv")).string());
        EXPECT_EQ(prec.n(), 4);
        EXPECT_EQ(prec.d(), 4);
    }

    std::string report = read_text(dir / "out" / "report.txt");
    for (const char* token : {"estimator: glasso", "estimator: ppg", "comparison",
                              "tail dependence", "mahalanobis exceedance", "faithfulness audit"}) {
        EXPECT_NE(report.find(token), std::string::npos) << token;
    }
    EXPECT_EQ(report, fout.str());
}

TEST(Fit, SkepticMethodAndRepeatDeterminism) {
    fs::path dir = fresh_dir("fit_skeptic");
    std::ostringstream sout, serr;
    ASSERT_EQ(cmd_simulate("t(k=5,d=3,rho=0.4,transforms=cubic)", 600, 33,
                           (dir / "data.csv").string(), sout, serr),
              0);
    PipelineConfig cfg;
    cfg.input = (dir / "data.csv").string();
    cfg.method = "skeptic";
    cfg.estimator = "glasso";
    cfg.out_dir = (dir / "out1").string();
    std::ostringstream o1, e1;
    ASSERT_EQ(cmd_fit(cfg, o1, e1), 0) << e1.str();
    cfg.out_dir = (dir / "out2").string();
    std::ostringstream o2, e2;
    ASSERT_EQ(cmd_fit(cfg, o2, e2), 0) << e2.str();
    EXPECT_EQ(read_text(dir / "out1" / "glasso_graph.json"),
              read_text(dir / "out2" / "glasso_graph.json"));
    EXPECT_EQ(read_text(dir / "out1" / "glasso_precision.csv"),
              read_text(dir / "out2" / "glasso_precision.csv"));
}

TEST(Fit, UsageErrorsExitTwo) {
    fs::path dir = fresh_dir("fit_errors");
    PipelineConfig cfg;
    cfg.input = (dir / "nope.csv").string();
    cfg.out_dir = (dir / "out").string();
    std::ostringstream out, err;
    EXPECT_EQ(cmd_fit(cfg, out, err), 2);  // missing input

    write_text(dir / "tiny.csv", "a,b\n1,2\n2,1\n");
    cfg.input = (dir / "tiny.csv").string();
    err.str("");
    EXPECT_EQ(cmd_fit(cfg, out, err), 2);  // n < 3
    EXPECT_NE(err.str().find("at least 3 rows"), std::string::npos);

    write_text(dir / "narrow.csv", "a\n1\n2\n3\n");
    cfg.input = (dir / "narrow.csv").string();
    EXPECT_EQ(cmd_fit(cfg, out, err), 2);  // d < 2

    write_text(dir / "ok.csv", "a,b\n1,2\n2,1\n3,4\n");
    cfg.input = (dir / "ok.csv").string();
    cfg.method = "ridge";
    EXPECT_EQ(cmd_fit(cfg, out, err), 2);  // unknown method
}

TEST(Mtp2Command, TextVerdicts) {
    std::ostringstream out, err;
    EXPECT_EQ(cmd_mtp2("t(k=5)", 3, std::nullopt, false, out, err), 0);
    EXPECT_NE(out.str().find("infeasible for all scale matrices"), std::string::npos);
    EXPECT_NE(out.str().find("verdict (dimension window, d=3): infeasible"), std::string::npos);

    out.str("");
    EXPECT_EQ(cmd_mtp2("kotz(alpha=1)", 3, std::nullopt, false, out, err), 0);
    EXPECT_NE(out.str().find("feasible for all d"), std::string::npos);
    EXPECT_NE(out.str().find("verdict (dimension window, d=3): feasible"), std::string::npos);

    out.str("");
    EXPECT_EQ(cmd_mtp2("logistic", 2, std::optional<double>(0.6), false, out, err), 0);
    EXPECT_NE(out.str().find("verdict (fixed scale, d=2"), std::string::npos);
    EXPECT_NE(out.str().find("): feasible"), std::string::npos);
}

TEST(Mtp2Command, JsonOutputParses) {
    std::ostringstream out, err;
    ASSERT_EQ(cmd_mtp2("kotz(alpha=1.2)", 8, std::nullopt, true, out, err), 0);
    json j = json::parse(out.str());
    EXPECT_EQ(j["mode"], "dimension-window");
    EXPECT_FALSE(j["feasible"].get<bool>());
    EXPECT_EQ(j["dim_bound"], 6);
    EXPECT_NEAR(j["ratio_inf"].get<double>(), 0.2, 1e-12);

    out.str("");
    ASSERT_EQ(cmd_mtp2("gaussian", 3, std::optional<double>(0.3), true, out, err), 0);
    json g = json::parse(out.str());
    EXPECT_TRUE(g["feasible"].get<bool>());
    EXPECT_NEAR(g["rho_star"].get<double>(), 0.3, 1e-12);
    EXPECT_EQ(g["dim_bound"], "all");
}

TEST(Mtp2Command, UsageErrorsExitTwo) {
    std::ostringstream out, err;
    EXPECT_EQ(cmd_mtp2("cauchy", 3, std::nullopt, false, out, err), 2);
    EXPECT_NE(err.str().find("error:"), std::string::npos);

    err.str("");
    EXPECT_EQ(cmd_mtp2("gaussian", 4, std::optional<double>(0.9), false, out, err), 2);
    EXPECT_NE(err.str().find("not positive definite"), std::string::npos);

    err.str("");
    EXPECT_EQ(cmd_mtp2("gaussian", 3, std::optional<double>(1.5), false, out, err), 2);
    EXPECT_EQ(cmd_mtp2("gaussian", 3, std::optional<double>(-0.1), false, out, err), 2);
}

TEST(GraphArtifact, JsonFieldOrderAndIndexing) {
    GraphArtifact a;
    a.dim = 3;
    a.method = "pearson";
    a.estimator = "glasso";
    a.lambda = 0.25;
    a.graph.dim = 3;
    a.graph.threshold = 1e-8;
    a.graph.edges.push_back(Edge{0, 2, 0.5});
    a.loglik = -1.25;
    a.ebic = 42.0;
    a.m_matrix = true;
    std::string s = graph_json_text(a);
    json j = json::parse(s);
    EXPECT_EQ(j["edges"][0]["i"], 1);  // zero-based edge emitted one-based
    EXPECT_EQ(j["edges"][0]["j"], 3);
    std::size_t p_dim = s.find("\"dim\"");
    std::size_t p_method = s.find("\"method\"");
    std::size_t p_lambda = s.find("\"lambda\"");
    std::size_t p_edges = s.find("\"edges\"");
    std::size_t p_m = s.find("\"m_matrix\"");
    EXPECT_LT(p_dim, p_method);
    EXPECT_LT(p_method, p_lambda);
    EXPECT_LT(p_lambda, p_edges);
    EXPECT_LT(p_edges, p_m);

    a.lambda.reset();
    json no_lambda = json::parse(graph_json_text(a));
    EXPECT_FALSE(no_lambda.contains("lambda"));
}

TEST(PipelineConfig, ValidateRejectsBadValues) {
    PipelineConfig cfg;
    cfg.input = "x.csv";
    EXPECT_NO_THROW(cfg.validate());
    cfg.method = "ridge";
    EXPECT_THROW(cfg.validate(), SpecParseError);
    cfg.method = "pearson";
    cfg.estimator = "lasso";
    EXPECT_THROW(cfg.validate(), SpecParseError);
    cfg.estimator = "both";
    cfg.lambda_points = 1;
    EXPECT_THROW(cfg.validate(), SpecParseError);
    cfg.lambda_points = 30;
    cfg.gamma = 1.5;
    EXPECT_THROW(cfg.validate(), SpecParseError);
    cfg.gamma = 0.5;
    cfg.threshold = -1.0;
    EXPECT_THROW(cfg.validate(), SpecParseError);
}
