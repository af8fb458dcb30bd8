#pragma once

// Graph artifact emission: JSON (fixed field order, 17-significant-digit
// reals, byte-deterministic) and Graphviz DOT with the identical edge set.

#include <fstream>
#include <optional>
#include <string>

#include "transell/csv.hpp"
#include "transell/errors.hpp"
#include "transell/graph_types.hpp"

namespace transell {

struct GraphArtifact {
    int dim = 0;
    std::string method;     // pearson | skeptic
    std::string estimator;  // glasso | ppg
    std::optional<double> lambda;
    PartialCorrelationGraph graph;  // zero-based edges; emitted 1-based
    double loglik = 0.0;
    double ebic = 0.0;
    bool m_matrix = false;
};

inline std::string graph_json_text(const GraphArtifact& a) {
    std::string s = "{\n";
    s += "  \"dim\": " + std::to_string(a.dim) + ",\n";
    s += "  \"method\": \"" + a.method + "\",\n";
    s += "  \"estimator\": \"" + a.estimator + "\",\n";
    if (a.lambda) s += "  \"lambda\": " + detail::format_real(*a.lambda) + ",\n";
    s += "  \"threshold\": " + detail::format_real(a.graph.threshold) + ",\n";
    s += "  \"edges\": [";
    for (std::size_t e = 0; e < a.graph.edges.size(); ++e) {
        const Edge& ed = a.graph.edges[e];
        s += (e ? ",\n            " : "\n            ");
        s += "{\"i\": " + std::to_string(ed.i + 1) + ", \"j\": " + std::to_string(ed.j + 1) +
             ", \"partial_corr\": " + detail::format_real(ed.weight) + "}";
    }
    s += a.graph.edges.empty() ? "],\n" : "\n           ],\n";
    s += "  \"loglik\": " + detail::format_real(a.loglik) + ",\n";
    s += "  \"ebic\": " + detail::format_real(a.ebic) + ",\n";
    s += std::string("  \"m_matrix\": ") + (a.m_matrix ? "true" : "false") + "\n";
    s += "}\n";
    return s;
}

inline void write_graph_json(const std::string& path, const GraphArtifact& a) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << graph_json_text(a);
    if (!out) throw Error("write failed for " + path);
}

inline std::string graph_dot_text(const PartialCorrelationGraph& g) {
    std::string s = "graph G {\n";
    for (const Edge& e : g.edges)
        s += "  " + std::to_string(e.i + 1) + " -- " + std::to_string(e.j + 1) +
             " [weight=" + detail::format_real(e.weight) + "];\n";
    s += "}\n";
    return s;
}

inline void write_graph_dot(const std::string& path, const PartialCorrelationGraph& g) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << graph_dot_text(g);
    if (!out) throw Error("write failed for " + path);
}

}  // namespace transell
