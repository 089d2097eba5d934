#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cqnls/errors.hpp"

namespace cqnls {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

enum class Grading { uniform, graded };

inline std::string to_string(Grading g) { return g == Grading::uniform ? "uniform" : "graded-near-origin"; }

inline Grading parse_grading(const std::string& s) {
    if (s == "uniform") return Grading::uniform;
    if (s == "graded" || s == "graded-near-origin") return Grading::graded;
    throw ConfigError("unknown grading '" + s + "'");
}

/// Scale A of the graded map r(xi) = A sinh(k xi): uniform below A, geometric above.
inline constexpr double graded_scale = 1e-3;

/**
 * @brief Nodes r_1 < ... < r_n = r_max on (0, r_max] with 4 pi r^2 quadrature weights.
 *
 * Nodes are images of xi_i = i/n under a smooth map r(xi) with r(0) = 0.
 * mu holds the one-dimensional trapezoid weights in r (xi-trapezoid times
 * r'(xi)), with an endpoint correction at r_max; weights = 4 pi r^2 mu.
 */
struct RadialGrid {
    int n_points = 0;
    double r_max = 0.0;
    Grading grading = Grading::uniform;
    std::vector<double> nodes;
    std::vector<double> mu;
    std::vector<double> weights;

    int size() const { return n_points; }
    /// Number of free nodes (all but r_max, where the Dirichlet condition holds).
    int interior() const { return n_points - 1; }

    std::string fingerprint() const {
        std::ostringstream os;
        os << "n=" << n_points << ";r_max=" << r_max << ";grading=" << to_string(grading);
        return os.str();
    }

    bool same_as(const RadialGrid& o) const {
        return n_points == o.n_points && r_max == o.r_max && grading == o.grading;
    }
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr build_grid(int n_points, double r_max, Grading grading = Grading::uniform) {
    if (n_points < 16) throw ConfigError("build_grid: n_points must be >= 16");
    if (!(r_max > 0.0) || !std::isfinite(r_max)) throw ConfigError("build_grid: r_max must be positive");

    auto g = std::make_shared<RadialGrid>();
    g->n_points = n_points;
    g->r_max = r_max;
    g->grading = grading;
    g->nodes.resize(n_points);
    g->mu.resize(n_points);
    g->weights.resize(n_points);

    const double dxi = 1.0 / n_points;
    const double k = std::asinh(r_max / graded_scale);
    for (int i = 0; i < n_points; ++i) {
        const double xi = (i + 1) * dxi;
        double r, dr;
        if (grading == Grading::uniform) {
            r = r_max * xi;
            dr = r_max;
        } else {
            r = graded_scale * std::sinh(k * xi);
            dr = graded_scale * k * std::cosh(k * xi);
        }
        g->nodes[i] = r;
        g->mu[i] = dxi * dr;
    }
    g->nodes.back() = r_max;

    // Trapezoid half weight at xi = 1, then the h^2 Euler-Maclaurin endpoint
    // term with a one-sided second-order derivative. The xi = 0 end needs
    // nothing because the integrand carries r^2.
    const int L = n_points - 1;
    const double w_n = g->mu[L], w_1 = g->mu[L - 1], w_2 = g->mu[L - 2];
    g->mu[L] = 0.5 * w_n - w_n / 8.0;
    g->mu[L - 1] = w_1 + w_1 / 6.0;
    g->mu[L - 2] = w_2 - w_2 / 24.0;

    for (int i = 0; i < n_points; ++i) g->weights[i] = 4.0 * pi * g->nodes[i] * g->nodes[i] * g->mu[i];
    return g;
}

/// Complex samples of a radial function on a grid.
struct RadialField {
    GridPtr grid;
    std::vector<cplx> values;

    RadialField() = default;
    explicit RadialField(GridPtr g) : grid(std::move(g)), values(grid->size(), cplx(0.0, 0.0)) {}
    RadialField(GridPtr g, std::vector<cplx> v) : grid(std::move(g)), values(std::move(v)) {
        if (static_cast<int>(values.size()) != grid->size())
            throw StructuralError("RadialField: value count does not match grid");
    }

    int size() const { return static_cast<int>(values.size()); }
    cplx& operator[](int i) { return values[i]; }
    const cplx& operator[](int i) const { return values[i]; }

    bool finite() const {
        for (auto& z : values)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
        return true;
    }

    bool is_real(double tol = 0.0) const {
        for (auto& z : values)
            if (std::abs(z.imag()) > tol) return false;
        return true;
    }
};

/// Sample a function of r on the nodes; the Dirichlet node r_max is set to zero.
template <class F>
RadialField sample(GridPtr g, F&& f) {
    RadialField out(g);
    for (int i = 0; i < g->interior(); ++i) out[i] = cplx(f(g->nodes[i]));
    out[g->size() - 1] = 0.0;
    return out;
}

inline void require_same_grid(const RadialField& f, const RadialGrid& g, const char* where) {
    if (!f.grid || !f.grid->same_as(g)) throw StructuralError(std::string(where) + ": field lives on a different grid");
}

/// Sum_i w_i g(r_i): quadrature of a radial function against 4 pi r^2 dr.
template <class F>
double integrate(const RadialGrid& g, F&& f) {
    double s = 0.0;
    for (int i = 0; i < g.n_points; ++i) s += g.weights[i] * f(g.nodes[i]);
    return s;
}

inline double l2_norm_sq(const RadialField& f) {
    double s = 0.0;
    for (int i = 0; i < f.size(); ++i) s += f.grid->weights[i] * std::norm(f[i]);
    return s;
}

inline cplx inner(const RadialField& f, const RadialField& g) {
    cplx s = 0.0;
    for (int i = 0; i < f.size(); ++i) s += f.grid->weights[i] * f[i] * std::conj(g[i]);
    return s;
}

}  // namespace cqnls
