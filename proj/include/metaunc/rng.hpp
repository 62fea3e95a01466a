#pragma once

#include <cstdint>
#include <random>

#include "metaunc/numerics.hpp"

namespace metaunc {

/// Seeded random stream. Every stochastic routine takes one of these
/// explicitly; there is no global generator. Distribution objects are
/// constructed per call so no hidden state survives between draws, which
/// keeps per-task streams independent and runs bit-reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    double normal(double mu = 0.0, double sd = 1.0) {
        return std::normal_distribution<double>(mu, sd)(engine_);
    }

    double gamma(double shape, double scale) {
        return std::gamma_distribution<double>(shape, scale)(engine_);
    }

    double beta(double a, double b) {
        const double x = gamma(a, 1.0);
        const double y = gamma(b, 1.0);
        return x / (x + y);
    }

    int bernoulli(double p) { return uniform() < p ? 1 : 0; }

    long poisson(double mean) {
        return std::poisson_distribution<long>(mean)(engine_);
    }

    /// Negative binomial with mean `mean` and dispersion `phi`
    /// (variance mean + mean^2/phi), drawn as a gamma-Poisson mixture.
    long neg_binomial(double mean, double phi) {
        const double lambda = gamma(phi, mean / phi);
        return poisson(lambda);
    }

    /// |N(mu, sd)|: half-normal when mu = 0, numerically identical to the
    /// 0-truncated normal for the narrow positive-location priors used here.
    double folded_normal(double mu, double sd) {
        return std::abs(normal(mu, sd));
    }

    std::size_t uniform_index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace metaunc
