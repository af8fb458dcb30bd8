#pragma once

// Shared graph value types used by the estimators and exporters.

#include <vector>

namespace transell {

struct Edge {
    int i = 0;  // i < j, zero-based
    int j = 0;
    double weight = 0.0;  // partial correlation
};

struct PartialCorrelationGraph {
    int dim = 0;
    double threshold = 0.0;
    std::vector<Edge> edges;  // sorted by (i, j)
};

}  // namespace transell
