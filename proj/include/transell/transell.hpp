#pragma once

// Umbrella header for the transell library.

#include "transell/csv.hpp"
#include "transell/data.hpp"
#include "transell/diagnostics.hpp"
#include "transell/errors.hpp"
#include "transell/glasso.hpp"
#include "transell/graph.hpp"
#include "transell/graph_types.hpp"
#include "transell/kendall.hpp"
#include "transell/matrix.hpp"
#include "transell/mixing.hpp"
#include "transell/mtp2.hpp"
#include "transell/parallel.hpp"
#include "transell/pipeline.hpp"
#include "transell/positive_mle.hpp"
#include "transell/rng.hpp"
#include "transell/sampling.hpp"
