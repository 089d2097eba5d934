#pragma once

#include <random>

#include "cqnls/grid.hpp"

namespace cqnls {

/// Options for smooth random test fields.
struct RandomFieldOptions {
    double amplitude_max = 1.0;
    double width_min = 1.0;
    double width_max = 5.0;
    int bumps = 3;
    bool complex_valued = false;
};

/**
 * Sum of a few Gaussian shells A_j exp(-((r - c_j)/w_j)^2), optionally with a
 * smooth radial phase. Deterministic given the generator state.
 */
inline RadialField random_smooth_field(GridPtr g, std::mt19937_64& rng, const RandomFieldOptions& o = {}) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    struct Bump {
        double A, c, w;
    };
    std::vector<Bump> bumps(o.bumps);
    for (auto& b : bumps) {
        b.A = o.amplitude_max * (0.2 + 0.8 * U(rng));
        b.w = o.width_min + (o.width_max - o.width_min) * U(rng);
        b.c = 0.5 * b.w * U(rng);
    }
    const double k = o.complex_valued ? 2.0 * (U(rng) - 0.5) : 0.0;
    const double k2 = o.complex_valued ? 0.2 * (U(rng) - 0.5) : 0.0;
    return sample(g, [&](double r) {
        double m = 0.0;
        for (auto& b : bumps) m += b.A * std::exp(-std::pow((r - b.c) / b.w, 2));
        return m * std::polar(1.0, k * r + k2 * r * r);
    });
}

}  // namespace cqnls
