#pragma once

// Counter-based 64-bit generator: SplitMix64 (Steele, Lea, Flood 2014).
// The state is a plain counter advanced by the golden-gamma increment and the
// output is a bijective finalizer of that counter, so streams are seekable and
// two runs with the same seed are bit-identical. Ports in other languages are
// expected to match distributions, not this exact stream.
//
// Derived draws:
//   uniform      (x >> 11) * 2^-53 + 2^-54, strictly inside (0,1)
//   normal       Box-Muller on uniform pairs (second value cached)
//   gamma        Marsaglia-Tsang squeeze for alpha >= 1; boosting
//                Gamma(alpha) = Gamma(alpha+1) * U^(1/alpha) for alpha < 1
//   chisq(k)     2 * Gamma(k/2)
//   exponential  inverse CDF

#include <cmath>
#include <cstdint>

namespace transell {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : ctr_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (ctr_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    double normal() {
        if (has_cache_) {
            has_cache_ = false;
            return cache_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        cache_ = r * std::sin(a);
        has_cache_ = true;
        return r * std::cos(a);
    }

    double exponential(double rate = 1.0) { return -std::log(uniform()) / rate; }

    double gamma(double alpha) {
        if (alpha < 1.0) {
            return gamma(alpha + 1.0) * std::pow(uniform(), 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }

    double chisq(double k) { return 2.0 * gamma(0.5 * k); }

  private:
    std::uint64_t ctr_;
    bool has_cache_ = false;
    double cache_ = 0.0;
};

}  // namespace transell
