#pragma once

#include <functional>
#include <vector>

#include "metaunc/simplex.hpp"

namespace metaunc {

/// Midpoint rule over the barycentric subdivision at resolution R: cell
/// centroids with one common weight. Supports 2 and 3 components, which is
/// what the density families here are integrated over.
struct SimplexQuadrature {
    std::vector<InteriorPmpVector> midpoints;
    double weight = 0.0;  // identical for every cell
};

SimplexQuadrature simplex_midpoint_rule(int n_components, int resolution);

/// Integral of exp(log_density) over the simplex via the midpoint rule.
double integrate_density(int n_components, int resolution,
                         const std::function<double(const InteriorPmpVector&)>& log_density,
                         int threads = 0);

}  // namespace metaunc
