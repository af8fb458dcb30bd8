#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace transell {

/// Base class for everything this library throws on contract violations.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : Error {
    std::size_t pivot_index;
    explicit NotPositiveDefinite(std::size_t idx)
        : Error("matrix is not positive definite (pivot " + std::to_string(idx) + ")"),
          pivot_index(idx) {}
};

struct IndexOutOfRange : Error {
    using Error::Error;
};

struct DegenerateColumn : Error {
    std::size_t index;
    explicit DegenerateColumn(std::size_t idx)
        : Error("column " + std::to_string(idx) + " is constant; rank correlation undefined"),
          index(idx) {}
};

struct InvalidLambda : Error {
    using Error::Error;
};

struct NotConverged : Error {
    std::size_t iterations;
    double residual;  // duality gap or KKT residual, whichever the solver tracks
    NotConverged(std::size_t iters, double res, const std::string& what = "solver did not converge")
        : Error(what + " (iterations=" + std::to_string(iters) +
                ", residual=" + std::to_string(res) + ")"),
          iterations(iters),
          residual(res) {}
};

struct InfeasibleInput : Error {
    using Error::Error;
};

struct InvalidMixing : Error {
    using Error::Error;
};

struct NonMonotoneTransform : Error {
    std::size_t index;
    explicit NonMonotoneTransform(std::size_t idx)
        : Error("transform " + std::to_string(idx) + " is not strictly increasing"),
          index(idx) {}
};

struct MomentUndefined : Error {
    using Error::Error;
};

struct InsufficientSample : Error {
    using Error::Error;
};

struct DimensionTooLarge : Error {
    using Error::Error;
};

struct DensityUnderflow : Error {
    using Error::Error;
};

struct GeneratorViolation : Error {
    double t;
    explicit GeneratorViolation(double at)
        : Error("density generator has increasing log at t=" + std::to_string(at)),
          t(at) {}
};

struct CsvParseError : Error {
    using Error::Error;
};

struct SpecParseError : Error {
    using Error::Error;
};

}  // namespace transell
