#include "metaunc/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include "metaunc/parallel.hpp"

namespace metaunc {

namespace {

InteriorPmpVector make_interior(std::vector<double> coords) {
    // Midpoints are strictly interior by construction; the clamp is a no-op
    // that routes through the validating constructor.
    return clamp_to_interior(PmpVector(std::move(coords)), 1e-12);
}

}  // namespace

SimplexQuadrature simplex_midpoint_rule(int n_components, int resolution) {
    if (resolution < 1) throw std::invalid_argument("quadrature resolution must be >= 1");
    SimplexQuadrature rule;
    const double R = static_cast<double>(resolution);
    if (n_components == 2) {
        rule.weight = 1.0 / R;
        rule.midpoints.reserve(resolution);
        for (int i = 0; i < resolution; ++i) {
            const double x = (i + 0.5) / R;
            rule.midpoints.push_back(make_interior({x, 1.0 - x}));
        }
        return rule;
    }
    if (n_components == 3) {
        // R^2 congruent subtriangles of area 1/(2R^2) each; centroids of the
        // upward and downward triangles.
        rule.weight = 1.0 / (2.0 * R * R);
        rule.midpoints.reserve(static_cast<std::size_t>(resolution) * resolution);
        for (int i = 0; i + 1 <= resolution; ++i) {
            for (int j = 0; i + j + 1 <= resolution; ++j) {
                const double a = (i + 1.0 / 3.0) / R;
                const double b = (j + 1.0 / 3.0) / R;
                rule.midpoints.push_back(make_interior({a, b, 1.0 - a - b}));
                if (i + j + 2 <= resolution) {
                    const double c = (i + 2.0 / 3.0) / R;
                    const double d = (j + 2.0 / 3.0) / R;
                    rule.midpoints.push_back(make_interior({c, d, 1.0 - c - d}));
                }
            }
        }
        return rule;
    }
    throw std::invalid_argument("simplex quadrature supports 2 or 3 components");
}

double integrate_density(int n_components, int resolution,
                         const std::function<double(const InteriorPmpVector&)>& log_density,
                         int threads) {
    const SimplexQuadrature rule = simplex_midpoint_rule(n_components, resolution);
    const std::size_t n = rule.midpoints.size();
    std::vector<double> values(n);
    parallel_for(n, threads, [&](std::size_t i) {
        values[i] = std::exp(log_density(rule.midpoints[i]));
    });
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum * rule.weight;
}

}  // namespace metaunc
