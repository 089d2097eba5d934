#pragma once

#include <math.h>  // boost 1.74 pchip calls isnan unqualified

#include <boost/math/interpolators/pchip.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "cqnls/field_io.hpp"
#include "cqnls/operator.hpp"

namespace cqnls {

/// Mass, energy, virial and the norms they are built from.
struct FunctionalReport {
    double mass = 0.0;
    double energy = 0.0;
    double virial = 0.0;
    double h1a_sq = 0.0;
    double l4_4 = 0.0;
    double l6_6 = 0.0;

    static FunctionalReport from_parts(double mass, double h1a_sq, double l4_4, double l6_6) {
        FunctionalReport r;
        r.mass = mass;
        r.h1a_sq = h1a_sq;
        r.l4_4 = l4_4;
        r.l6_6 = l6_6;
        r.energy = h1a_sq / 2.0 - l4_4 / 4.0 + l6_6 / 6.0;
        r.virial = h1a_sq + l6_6 - 0.75 * l4_4;
        return r;
    }
};

inline const char* report_csv_header() { return "mass,energy,virial,h1a_sq,l4_4,l6_6"; }

inline std::string report_csv_row(const FunctionalReport& r) {
    return fmt_double(r.mass) + "," + fmt_double(r.energy) + "," + fmt_double(r.virial) + "," + fmt_double(r.h1a_sq) +
           "," + fmt_double(r.l4_4) + "," + fmt_double(r.l6_6);
}

inline FunctionalReport report(const DiscreteOperator& op, const RadialField& f) {
    require_same_grid(f, *op.grid(), "report");
    if (!f.finite()) throw DataError("report: field has non-finite samples");
    double m = 0.0, l4 = 0.0, l6 = 0.0;
    const auto& w = op.grid()->weights;
    for (int i = 0; i < f.size(); ++i) {
        const double p = std::norm(f[i]);
        m += w[i] * p;
        l4 += w[i] * p * p;
        l6 += w[i] * p * p * p;
    }
    return FunctionalReport::from_parts(m, op.quadratic_form(f), l4, l6);
}

/// ||f||_2 ||f||_{Hdot^1_a}^{3/(1+alpha)} ||f||_6^{3 alpha/(1+alpha)} / ||f||_4^4
inline double j_quotient(const FunctionalReport& r, double alpha) {
    if (!(alpha > 0)) throw ConfigError("j_quotient: alpha must be positive");
    if (r.l4_4 <= 0.0 || r.mass <= 0.0) throw DomainError("j_quotient: undefined for the zero field");
    const double e1 = 3.0 / (1.0 + alpha), e2 = 3.0 * alpha / (1.0 + alpha);
    return std::sqrt(r.mass) * std::pow(r.h1a_sq, e1 / 2.0) * std::pow(r.l6_6, e2 / 6.0) / r.l4_4;
}

inline double j_quotient(const DiscreteOperator& op, const RadialField& f, double alpha) {
    return j_quotient(report(op, f), alpha);
}

enum class ScalingKind { mass_preserving, l4_tilting, two_parameter };

/**
 * mass-preserving: s^{3/2} f(s x); l4-tilting: s^{-1/2} f(x/s);
 * two-parameter: r f(b x).
 */
struct ScalingLaw {
    ScalingKind kind = ScalingKind::mass_preserving;
    double s = 1.0;
    double r = 1.0;
    double b = 1.0;

    static ScalingLaw mass_preserving(double s) { return {ScalingKind::mass_preserving, s, 1.0, 1.0}; }
    static ScalingLaw l4_tilting(double s) { return {ScalingKind::l4_tilting, s, 1.0, 1.0}; }
    static ScalingLaw two_parameter(double r, double b) { return {ScalingKind::two_parameter, 1.0, r, b}; }

    /// Amplitude factor and argument factor: g(x) = amp * f(arg * x).
    std::pair<double, double> amp_arg() const {
        switch (kind) {
            case ScalingKind::mass_preserving: return {std::pow(s, 1.5), s};
            case ScalingKind::l4_tilting: return {1.0 / std::sqrt(s), 1.0 / s};
            default: return {r, b};
        }
    }

    /// Exact factors for (mass, h1a_sq, l4_4, l6_6).
    std::array<double, 4> factors() const {
        auto [A, c] = amp_arg();
        const double c3 = c * c * c;
        return {A * A / c3, A * A / c, std::pow(A, 4) / c3, std::pow(A, 6) / c3};
    }
};

/**
 * @brief Evaluate a sampled field between and beyond its nodes.
 *
 * Monotone cubic (pchip) on the nodes for re and im separately. Below the
 * first node a power law with the slope of the first two nodes; above r_max
 * the decay model C exp(-kappa r)/r fitted on the outer 10% of nodes.
 */
class FieldInterpolant {
public:
    explicit FieldInterpolant(const RadialField& f) : g_(f.grid), f_(f) {
        const int n = f.size();
        std::vector<double> x(g_->nodes), yr(n), yi(n);
        for (int i = 0; i < n; ++i) {
            yr[i] = f[i].real();
            yi[i] = f[i].imag();
        }
        using boost::math::interpolators::pchip;
        re_ = std::make_unique<pchip<std::vector<double>>>(std::vector<double>(x), std::move(yr));
        im_ = std::make_unique<pchip<std::vector<double>>>(std::move(x), std::move(yi));

        const double a0 = std::abs(f[0]), a1 = std::abs(f[1]);
        gamma0_ = (a0 > 0 && a1 > 0) ? std::log(a1 / a0) / std::log(g_->nodes[1] / g_->nodes[0]) : 0.0;

        // tail fit on the outer 10% of free nodes
        const int last = g_->interior() - 1;
        const int first = std::max(1, last - std::max(2, g_->interior() / 10));
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int cnt = 0;
        bool ok = true;
        for (int i = first; i <= last; ++i) {
            const double r = g_->nodes[i], v = std::abs(f[i]);
            if (!(v > 0) || !std::isfinite(std::log(r * v))) {
                ok = false;
                break;
            }
            const double y = std::log(r * v);
            sx += r;
            sy += y;
            sxx += r * r;
            sxy += r * y;
            ++cnt;
        }
        if (ok && cnt >= 2) {
            const double den = cnt * sxx - sx * sx;
            kappa_ = -(cnt * sxy - sx * sy) / den;
        }
        if (!(kappa_ > 0)) ok = false;
        tail_ok_ = ok;
        r_last_ = g_->nodes[last];
        f_last_ = f[last];
    }

    cplx operator()(double r) const {
        const auto& nodes = g_->nodes;
        if (r <= nodes.front()) {
            if (r <= 0) r = nodes.front() * 1e-12;
            return f_[0] * std::pow(r / nodes.front(), gamma0_);
        }
        if (r <= g_->r_max) return {(*re_)(r), (*im_)(r)};
        if (!tail_ok_) return 0.0;
        return f_last_ * (r_last_ / r) * std::exp(-kappa_ * (r - r_last_));
    }

private:
    GridPtr g_;
    RadialField f_;
    std::unique_ptr<boost::math::interpolators::pchip<std::vector<double>>> re_, im_;
    double gamma0_ = 0.0;
    double kappa_ = 0.0;
    bool tail_ok_ = false;
    double r_last_ = 0.0;
    cplx f_last_ = 0.0;
};

inline RadialField apply_scaling(const RadialField& f, const ScalingLaw& law) {
    const bool bad = law.kind == ScalingKind::two_parameter ? !(law.r > 0 && law.b > 0) : !(law.s > 0);
    if (bad) throw ConfigError("apply_scaling: scaling parameters must be positive");
    auto [A, c] = law.amp_arg();
    if (A == 1.0 && c == 1.0) return f;
    FieldInterpolant ip(f);
    RadialField out(f.grid);
    for (int i = 0; i < f.grid->interior(); ++i) out[i] = A * ip(c * f.grid->nodes[i]);
    return out;
}

}  // namespace cqnls
