#pragma once

#include <cmath>
#include <random>

#include "sfhn/grid.hpp"

namespace sfhn::test {

inline ScalarField random_field(const SpatialGrid& grid, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    ScalarField f(grid);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = normal(rng);
    return f;
}

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) { return norm_linf(a - b); }

}  // namespace sfhn::test
