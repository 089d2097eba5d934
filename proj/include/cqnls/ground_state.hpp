#pragma once

#include <boost/math/interpolators/quintic_hermite.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/bessel_prime.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cqnls/functionals.hpp"
#include "cqnls/random_fields.hpp"

namespace cqnls {

inline constexpr double omega_max = 3.0 / 16.0;

/// Upper root of omega - Q^2 + Q^4 (the plateau value of droplet profiles).
inline double plateau_value(double omega) { return std::sqrt(0.5 * (1.0 + std::sqrt(1.0 - 4.0 * omega))); }

struct ShootOptions {
    double rtol = 1e-13;
    double atol = 1e-15;
    double r_stop = 5000.0;
    long max_steps = 2000000;
    bool polish = true;          ///< Newton-polish the grid profile into a discrete stationary state
    double cut_fraction = 1e-2;  ///< tail cut is searched where Q < cut_fraction * Q(1)
};

/**
 * @brief Continuum radial profile from the shooting run.
 *
 * Series c r^beta (1 + ...) below r0, quintic Hermite through the accepted
 * integrator steps on [r0, rc], and the linear decay A K_nu(kappa r)/sqrt(r)
 * beyond rc.
 */
class ContinuumProfile {
public:
    double a = 0, omega = 0, beta = 0, c = 0, r0 = 0, rc = 0, qc = 0, nu = 0.5, kappa = 0;
    std::array<double, 4> series{};  ///< coefficients at exponents beta, beta+2, 3beta+2, 5beta+2

    ContinuumProfile(std::vector<double> r, std::vector<double> q, std::vector<double> dq, std::vector<double> d2q)
        : rk_(r), qk_(q) {
        herm_ = std::make_unique<boost::math::interpolators::quintic_hermite<std::vector<double>>>(
            std::move(r), std::move(q), std::move(dq), std::move(d2q));
    }

    /// K_nu(kappa r) / sqrt(r), normalized to 1 at rc.
    double tail_shape(double r) const {
        const double k = boost::math::cyl_bessel_k(nu, kappa * r);
        return k / std::sqrt(r) / tail_norm_;
    }
    double tail_log_slope(double r) const { return tail_log_slope_at(nu, kappa, r); }
    static double tail_log_slope_at(double nu, double kappa, double r) {
        const double k = boost::math::cyl_bessel_k(nu, kappa * r);
        const double kp = boost::math::cyl_bessel_k_prime(nu, kappa * r);
        return kappa * kp / k - 0.5 / r;
    }

    void set_tail(double rc_, double qc_) {
        rc = rc_;
        qc = qc_;
        tail_norm_ = 1.0;
        tail_norm_ = tail_shape(rc);
    }

    double series_value(double r) const {
        const double b = beta;
        return series[0] * std::pow(r, b) + series[1] * std::pow(r, b + 2) + series[2] * std::pow(r, 3 * b + 2) +
               series[3] * std::pow(r, 5 * b + 2);
    }
    double series_deriv(double r) const {
        const double b = beta;
        return series[0] * b * std::pow(r, b - 1) + series[1] * (b + 2) * std::pow(r, b + 1) +
               series[2] * (3 * b + 2) * std::pow(r, 3 * b + 1) + series[3] * (5 * b + 2) * std::pow(r, 5 * b + 1);
    }

    double value(double r) const {
        if (r <= r0) return series_value(r);
        if (r <= rc) return (*herm_)(r);
        const double t = tail_shape(r);
        return std::isfinite(t) ? qc * t : 0.0;
    }
    double deriv(double r) const {
        if (r <= r0) return series_deriv(r);
        if (r <= rc) return herm_->prime(r);
        const double t = tail_shape(r);
        return std::isfinite(t) ? qc * t * tail_log_slope(r) : 0.0;
    }

    const std::vector<double>& knots() const { return rk_; }

    /**
     * Functionals of x -> amp * Q(arg * x) by quadrature: 8-point Gauss on each
     * integrator step, the series integrals below r0 and exp-sinh on the tail.
     */
    FunctionalReport quadrature_report(double amp = 1.0, double arg = 1.0) const {
        double M = 0, Kg = 0, P = 0, l4 = 0, l6 = 0;
        // origin piece in the y = arg x variable
        const double b = beta, cc = c * c;
        M += 4 * pi * cc * std::pow(r0, 2 * b + 3) / (2 * b + 3);
        Kg += 4 * pi * cc * b * b * std::pow(r0, 2 * b + 1) / (2 * b + 1);
        P += 4 * pi * a * cc * std::pow(r0, 2 * b + 1) / (2 * b + 1);
        l4 += 4 * pi * cc * cc * std::pow(r0, 4 * b + 3) / (4 * b + 3);
        l6 += 4 * pi * cc * cc * cc * std::pow(r0, 6 * b + 3) / (6 * b + 3);
        using GL = boost::math::quadrature::gauss<double, 8>;
        auto acc = [&](double y0, double y1) {
            const double mid = 0.5 * (y0 + y1), half = 0.5 * (y1 - y0);
            const auto& absc = GL::abscissa();
            const auto& wts = GL::weights();
            for (size_t j = 0; j < absc.size(); ++j) {
                for (int sgn : {-1, 1}) {
                    if (j == 0 && absc[0] == 0.0 && sgn < 0) continue;
                    const double y = mid + sgn * half * absc[j];
                    const double w = half * wts[j];
                    const double q = (*herm_)(y), dq = herm_->prime(y);
                    const double q2 = q * q;
                    M += w * 4 * pi * y * y * q2;
                    Kg += w * 4 * pi * y * y * dq * dq;
                    P += w * 4 * pi * a * q2;
                    l4 += w * 4 * pi * y * y * q2 * q2;
                    l6 += w * 4 * pi * y * y * q2 * q2 * q2;
                }
            }
        };
        for (size_t k = 0; k + 1 < rk_.size(); ++k) acc(rk_[k], rk_[k + 1]);
        auto tail = tail_integrals();
        M += tail[0];
        Kg += tail[1];
        P += tail[2];
        l4 += tail[3];
        l6 += tail[4];
        // substitute y = arg x
        const double A2 = amp * amp, c3 = arg * arg * arg;
        return FunctionalReport::from_parts(A2 * M / c3, A2 * (Kg + P) / arg, A2 * A2 * l4 / c3, A2 * A2 * A2 * l6 / c3);
    }

    /// Tail contributions beyond rc to (M, grad part, potential part, l4, l6).
    std::array<double, 5> tail_integrals() const {
        boost::math::quadrature::exp_sinh<double> es;
        auto I = [&](auto f) {
            double err;
            return es.integrate([&](double s) { return f(rc + s); }, std::sqrt(std::numeric_limits<double>::epsilon()),
                                &err);
        };
        auto qt = [&](double r) {
            const double t = tail_shape(r);
            return std::isfinite(t) ? qc * t : 0.0;
        };
        std::array<double, 5> out{};
        out[0] = I([&](double r) { return 4 * pi * r * r * std::pow(qt(r), 2); });
        out[1] = I([&](double r) {
            const double q = qt(r);
            return q == 0.0 ? 0.0 : 4 * pi * r * r * std::pow(q * tail_log_slope(r), 2);
        });
        out[2] = I([&](double r) { return 4 * pi * a * std::pow(qt(r), 2); });
        out[3] = I([&](double r) { return 4 * pi * r * r * std::pow(qt(r), 4); });
        out[4] = I([&](double r) { return 4 * pi * r * r * std::pow(qt(r), 6); });
        return out;
    }

private:
    std::vector<double> rk_, qk_;
    std::unique_ptr<boost::math::interpolators::quintic_hermite<std::vector<double>>> herm_;
    double tail_norm_ = 1.0;
};

/// Positive decaying solution of L_a Q + Q^5 - Q^3 + omega Q = 0 with its certificates.
struct GroundState {
    double a = 0.0;
    double omega = 0.0;
    std::optional<double> alpha;
    double amplitude = 0.0;       ///< series coefficient c in Q ~ c r^beta
    RadialField profile;          ///< on the requested grid (Newton-polished when enabled)
    FunctionalReport report;      ///< continuum functionals (certified)
    FunctionalReport grid_report; ///< discrete functionals of the grid profile
    double pohozaev_1 = 0.0, pohozaev_2 = 0.0, l4_identity = 0.0;
    double sampled_residual = 0.0;   ///< discrete stationary residual of the sampled continuum profile
    double discrete_residual = 0.0;  ///< same after polishing
    double tail_cut = 0.0;
    bool tight_window = false;       ///< omega < 3 alpha / (16 (1 + alpha)) when alpha is set
    std::shared_ptr<const ContinuumProfile> continuum;

    std::pair<double, double> pohozaev_residuals() const { return {pohozaev_1, pohozaev_2}; }
};

namespace detail {

using State = std::array<double, 7>;  // Q, Q', M, grad, potential, l4, l6

enum class Shot { under, over, above };

struct Trajectory {
    std::vector<double> r;
    std::vector<State> y;
};

struct ShootSystem {
    double a, omega;
    void operator()(const State& y, State& dy, double r) const {
        const double q = y[0], p = y[1], q2 = q * q;
        dy[0] = p;
        dy[1] = -2.0 * p / r + a * q / (r * r) + omega * q + q2 * q2 * q - q2 * q;
        dy[2] = 4 * pi * r * r * q2;
        dy[3] = 4 * pi * r * r * p * p;
        dy[4] = 4 * pi * a * q2;
        dy[5] = 4 * pi * r * r * q2 * q2;
        dy[6] = 4 * pi * r * r * q2 * q2 * q2;
    }
};

struct Shooter {
    double a, omega, beta, qp, r0;
    ShootOptions opt;

    std::array<double, 4> series(double c) const {
        const double b = beta;
        auto den = [&](double g) { return g * (g + 1) - a; };
        return {c, omega * c / den(b + 2), -c * c * c / den(3 * b + 2), std::pow(c, 5) / den(5 * b + 2)};
    }

    State initial(double c) const {
        const auto s = series(c);
        const double b = beta, r = r0;
        State y{};
        y[0] = s[0] * std::pow(r, b) + s[1] * std::pow(r, b + 2) + s[2] * std::pow(r, 3 * b + 2) +
               s[3] * std::pow(r, 5 * b + 2);
        y[1] = s[0] * b * std::pow(r, b - 1) + s[1] * (b + 2) * std::pow(r, b + 1) +
               s[2] * (3 * b + 2) * std::pow(r, 3 * b + 1) + s[3] * (5 * b + 2) * std::pow(r, 5 * b + 1);
        // integrals from 0 to r0 of the leading term
        const double cc = c * c;
        y[2] = 4 * pi * cc * std::pow(r, 2 * b + 3) / (2 * b + 3);
        y[3] = 4 * pi * cc * b * b * std::pow(r, 2 * b + 1) / (2 * b + 1);
        y[4] = 4 * pi * a * cc * std::pow(r, 2 * b + 1) / (2 * b + 1);
        y[5] = 4 * pi * cc * cc * std::pow(r, 4 * b + 3) / (4 * b + 3);
        y[6] = 4 * pi * cc * cc * cc * std::pow(r, 6 * b + 3) / (6 * b + 3);
        return y;
    }

    /// Integrate until the trajectory is classified; optionally record it.
    Shot run(double c, Trajectory* rec) const {
        namespace ode = boost::numeric::odeint;
        auto stepper = ode::make_controlled(opt.atol, opt.rtol, ode::runge_kutta_fehlberg78<State>());
        ShootSystem sys{a, omega};
        State y = initial(c);
        double r = r0, dr = r0 * 1e-2;
        if (rec) {
            rec->r.assign(1, r);
            rec->y.assign(1, y);
        }
        auto classify = [&](const State& s) -> std::optional<Shot> {
            if (s[0] < 0) return Shot::over;
            if (s[1] > 0) return s[0] < qp ? Shot::under : Shot::above;
            return std::nullopt;
        };
        if (auto k = classify(y)) return *k;
        for (long n = 0; n < opt.max_steps; ++n) {
            int tries = 0;
            while (stepper.try_step(sys, y, r, dr) == ode::fail) {
                if (++tries > 500) throw SolverError("shooting integrator step-size control failed");
            }
            if (rec) {
                rec->r.push_back(r);
                rec->y.push_back(y);
            }
            if (auto k = classify(y)) return *k;
            if (r > opt.r_stop) throw SolverError("shooting trajectory did not classify before r_stop");
        }
        throw SolverError("shooting exceeded the step budget");
    }
};

}  // namespace detail

struct ShootContinuum {
    double a, omega, c;
    FunctionalReport report;
    double pohozaev_1, pohozaev_2, l4_identity, rc;
    std::shared_ptr<ContinuumProfile> profile;
};

/// Continuum part of the shooting: amplitude bisection, tail cut, certified functionals.
inline ShootContinuum shoot_continuum(double a, double omega, double r_first = 1e-3, const ShootOptions& opt = {}) {
    auto spec = OperatorSpec::make(a);
    if (!(omega > 0.0 && omega < omega_max))
        throw DomainError("no solution: the stationary problem needs 0 < omega < 3/16");
    if (a > 0.0)
        throw DomainError("no nonincreasing positive profile for a > 0 (Q ~ r^beta with beta > 0); use coupling a^0 = 0");

    detail::Shooter sh{a, omega, spec.beta, plateau_value(omega), std::min(1e-6, 0.5 * r_first), opt};

    // bracket: smallest amplitudes turn back up (under); scan geometrically
    double lo = 0.0, hi = 0.0;
    bool found = false;
    double prev = 0.0;
    for (double c = 1e-3; c < 50.0; c *= 1.2) {
        if (sh.run(c, nullptr) != detail::Shot::under) {
            if (prev == 0.0) throw SolverError("shooting bracket: smallest amplitude already overshoots");
            lo = prev;
            hi = c;
            found = true;
            break;
        }
        prev = c;
    }
    if (!found) throw SolverError("shooting bracket not found for a=" + fmt_double(a) + " omega=" + fmt_double(omega));
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (sh.run(mid, nullptr) == detail::Shot::under)
            lo = mid;
        else
            hi = mid;
    }

    detail::Trajectory tr;
    sh.run(lo, &tr);
    const int n = static_cast<int>(tr.r.size());

    // reference amplitude at r ~ 1
    double qref = 0.0;
    for (int i = 0; i < n; ++i)
        if (tr.r[i] >= 1.0) {
            qref = tr.y[i][0];
            break;
        }
    if (qref <= 0.0) throw SolverError("shooting trajectory ended before r = 1");

    const double nu = std::sqrt(0.25 + a), kappa = std::sqrt(omega);
    int best = -1;
    double best_mis = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double q = tr.y[i][0], p = tr.y[i][1];
        if (tr.r[i] < 1.0 || q <= 0.0 || q >= opt.cut_fraction * qref || p >= 0.0) continue;
        const double mis = std::abs(p / q - ContinuumProfile::tail_log_slope_at(nu, kappa, tr.r[i]));
        if (mis < best_mis) {
            best_mis = mis;
            best = i;
        }
    }
    if (best < 0) throw SolverError("shooting: no tail-matching point (profile did not decay far enough)");

    std::vector<double> rk(best + 1), qk(best + 1), dqk(best + 1), d2qk(best + 1);
    detail::ShootSystem sys{a, omega};
    for (int i = 0; i <= best; ++i) {
        detail::State dy;
        sys(tr.y[i], dy, tr.r[i]);
        rk[i] = tr.r[i];
        qk[i] = tr.y[i][0];
        dqk[i] = tr.y[i][1];
        d2qk[i] = dy[1];
    }
    auto prof = std::make_shared<ContinuumProfile>(std::move(rk), std::move(qk), std::move(dqk), std::move(d2qk));
    prof->a = a;
    prof->omega = omega;
    prof->beta = spec.beta;
    prof->c = lo;
    prof->r0 = sh.r0;
    prof->series = sh.series(lo);
    prof->nu = nu;
    prof->kappa = kappa;
    prof->set_tail(tr.r[best], tr.y[best][0]);

    const auto& yc = tr.y[best];
    auto tail = prof->tail_integrals();
    const double M = yc[2] + tail[0], K = yc[3] + tail[1] + yc[4] + tail[2], l4 = yc[5] + tail[3], l6 = yc[6] + tail[4];

    ShootContinuum out{a, omega, lo, FunctionalReport::from_parts(M, K, l4, l6), 0, 0, 0, tr.r[best], prof};
    out.pohozaev_1 = (K + l6 - l4 + omega * M) / (std::abs(K) + l6 + l4 + omega * M);
    out.pohozaev_2 = (K / 6 + l6 / 6 - l4 / 4 + omega * M / 2) / (std::abs(K) / 6 + l6 / 6 + l4 / 4 + omega * M / 2);
    out.l4_identity = l4 / (4 * omega * M) - 1.0;
    return out;
}

/// Discrete stationary residual ||L Q + Q^5 - Q^3 + omega Q|| / ||Q|| for a real profile.
inline double stationary_residual(const DiscreteOperator& op, const RadialField& q, double omega) {
    auto x = op.to_sym(q);
    std::vector<cplx> y;
    op.apply_sym(x, y);
    double num = 0, den = 0;
    for (int i = 0; i < op.dim(); ++i) {
        const double u2 = std::norm(q[i]);
        const cplx f = y[i] + (u2 * u2 - u2 + omega) * x[i];
        num += std::norm(f);
        den += std::norm(x[i]);
    }
    return den > 0 ? std::sqrt(num / den) : 0.0;
}

/// Newton iteration on the discrete stationary equation, starting from q.
inline RadialField polish_stationary(const DiscreteOperator& op, const RadialField& q, double omega,
                                     double tol = 1e-13, int max_iter = 30) {
    const int N = op.dim();
    const auto& sw = op.sqrt_weights();
    std::vector<double> x(N), y;
    for (int i = 0; i < N; ++i) x[i] = sw[i] * q[i].real();
    double norm0 = 0;
    for (double v : x) norm0 += v * v;
    norm0 = std::sqrt(norm0);
    for (int it = 0; it < max_iter; ++it) {
        op.apply_sym(x, y);
        std::vector<double> F(N), s(N);
        double fn = 0;
        for (int i = 0; i < N; ++i) {
            const double u = x[i] / sw[i], u2 = u * u;
            F[i] = -(y[i] + (u2 * u2 - u2 + omega) * x[i]);
            s[i] = 5 * u2 * u2 - 3 * u2 + omega;
            fn += F[i] * F[i];
        }
        if (std::sqrt(fn) <= tol * norm0) break;
        auto dx = solve_tridiag_general(op, s, F);
        for (int i = 0; i < N; ++i) x[i] += dx[i];
    }
    RadialField out(op.grid());
    for (int i = 0; i < N; ++i) out[i] = x[i] / sw[i];
    if (!out.finite()) throw SolverError("Newton polish diverged");
    return out;
}

/// Certify and place a continuum solution on a grid.
inline GroundState make_ground_state(const ShootContinuum& sc, const DiscreteOperator& op, const ShootOptions& opt = {}) {
    const auto& g = op.grid();
    GroundState gs;
    gs.a = sc.a;
    gs.omega = sc.omega;
    gs.amplitude = sc.c;
    gs.report = sc.report;
    gs.pohozaev_1 = sc.pohozaev_1;
    gs.pohozaev_2 = sc.pohozaev_2;
    gs.l4_identity = sc.l4_identity;
    gs.tail_cut = sc.rc;
    gs.continuum = sc.profile;

    std::ostringstream diag;
    diag << "a=" << sc.a << " omega=" << sc.omega << " pohozaev_1=" << sc.pohozaev_1 << " pohozaev_2=" << sc.pohozaev_2
         << " l4/(4 omega M)-1=" << sc.l4_identity;
    if (std::abs(sc.pohozaev_1) > 1e-6 || std::abs(sc.pohozaev_2) > 1e-6 || std::abs(sc.l4_identity) > 1e-5)
        throw SolverError("ground state failed Pohozaev certification: " + diag.str());

    auto raw = sample(g, [&](double r) { return sc.profile->value(r); });
    gs.sampled_residual = stationary_residual(op, raw, sc.omega);
    gs.profile = opt.polish ? polish_stationary(op, raw, sc.omega) : raw;
    gs.discrete_residual = stationary_residual(op, gs.profile, sc.omega);
    gs.grid_report = report(op, gs.profile);

    // positivity and monotonicity, up to rounding-level noise in the far tail
    const double qmax = std::abs(gs.profile[0]);
    for (int i = 0; i < g->interior(); ++i) {
        const double v = gs.profile[i].real();
        if (v < -1e-12 * qmax) throw SolverError("ground state profile is not nonnegative: " + diag.str());
        if (i > 0 && v > gs.profile[i - 1].real() + 1e-12 * qmax)
            throw SolverError("ground state profile is not nonincreasing: " + diag.str());
    }
    return gs;
}

inline GroundState shoot(double a, double omega, GridPtr grid, const ShootOptions& opt = {}) {
    auto sc = shoot_continuum(a, omega, grid->nodes.front(), opt);
    return make_ground_state(sc, build_operator(a, grid), opt);
}

/// Window for the omega search of select_omega_for_alpha.
inline constexpr double omega_search_lo = 1e-4;
inline constexpr double omega_search_hi = omega_max - 1e-4;

/// Frequency whose ground state has ||Q||_6^6 = alpha ||Q||^2_{Hdot^1_a}.
inline double find_omega_for_alpha(double a, double alpha, double r_first = 1e-3, const ShootOptions& opt = {}) {
    if (a > 0.0) throw DomainError("no optimizer for repulsive coupling (a > 0)");
    if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
    auto ratio = [&](double w) {
        auto sc = shoot_continuum(a, w, r_first, opt);
        return sc.report.l6_6 / sc.report.h1a_sq - alpha;
    };
    const std::vector<double> scan = {omega_search_lo, 3e-4, 1e-3, 3e-3, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06,
                                      0.07, 0.08, 0.09, 0.1, 0.11, 0.12, 0.13, 0.14, 0.15, 0.16,
                                      0.17, 0.18, omega_search_hi};
    double wl = 0, fl = 0;
    bool have = false;
    for (double w : scan) {
        double f;
        try {
            f = ratio(w);
        } catch (const SolverError&) {
            continue;
        }
        if (have && (fl < 0) != (f < 0)) {
            boost::uintmax_t iters = 80;
            auto res = boost::math::tools::toms748_solve(ratio, wl, w, fl, f,
                                                         boost::math::tools::eps_tolerance<double>(48), iters);
            return 0.5 * (res.first + res.second);
        }
        if (f == 0.0) return w;
        wl = w;
        fl = f;
        have = true;
    }
    throw SolverError("ratio l6/h1a_sq does not bracket alpha=" + fmt_double(alpha) + " in the omega window");
}

inline GroundState select_omega_for_alpha(double a, double alpha, GridPtr grid, const ShootOptions& opt = {}) {
    const double w = find_omega_for_alpha(a, alpha, grid->nodes.front(), opt);
    auto gs = shoot(a, w, grid, opt);
    gs.alpha = alpha;
    gs.tight_window = w < 3.0 * alpha / (16.0 * (1.0 + alpha));
    const double rat = gs.report.l6_6 / gs.report.h1a_sq;
    if (std::abs(rat / alpha - 1.0) > 1e-6)
        throw SolverError("selected omega misses the ratio: l6/h1a_sq=" + fmt_double(rat));
    return gs;
}

enum class SharpMethod { closed_form, direct };

inline std::string to_string(SharpMethod m) { return m == SharpMethod::closed_form ? "closed-form" : "direct-minimization"; }

struct SharpConstant {
    double a = 0.0;
    double alpha = 1.0;
    double value = 0.0;
    SharpMethod method = SharpMethod::closed_form;
    bool delegated = false;  ///< a > 0: value of the a = 0 problem
    double omega = 0.0;      ///< closed-form: frequency of the optimizer
    double best_j = 0.0;     ///< direct: min J found
    int best_start = -1;
};

/// C = [4(1+alpha) / (3 alpha^{alpha/(2(1+alpha))})] ||Q||_{Hdot}^{(alpha-1)/(alpha+1)} / ||Q||_2
inline double closed_form_constant(const FunctionalReport& q, double alpha) {
    const double pre = 4.0 * (1.0 + alpha) / (3.0 * std::pow(alpha, alpha / (2.0 * (1.0 + alpha))));
    return pre * std::pow(q.h1a_sq, (alpha - 1.0) / (2.0 * (alpha + 1.0))) / std::sqrt(q.mass);
}

struct JFlowOptions {
    int starts = 10;
    int max_iter = 40000;
    double tau = 1e-2;
    double tol = 1e-14;
    std::uint64_t seed = 0;
};

struct JFlowResult {
    double j = 0.0;
    RadialField field;
};

/**
 * Normalized gradient flow of log J with the kinetic term implicit:
 * (I + tau c_K L) f+ = f - tau (f + c6 f^5 - c4 f^3), then rescale to unit mass.
 * J is invariant under amplitude scaling, so the normalization only fixes the gauge.
 */
inline JFlowResult j_flow(const DiscreteOperator& op, double alpha, RadialField f, const JFlowOptions& o) {
    const int N = op.dim();
    const auto& sw = op.sqrt_weights();
    std::vector<double> x(N);
    for (int i = 0; i < N; ++i) x[i] = sw[i] * f[i].real();
    auto normalize = [&](std::vector<double>& v) {
        double m = 0;
        for (double t : v) m += t * t;
        const double s = 1.0 / std::sqrt(m);
        for (double& t : v) t *= s;
    };
    normalize(x);
    auto J_of = [&](const std::vector<double>& v, FunctionalReport* out) {
        std::vector<double> y;
        op.apply_sym(v, y);
        double M = 0, K = 0, l4 = 0, l6 = 0;
        for (int i = 0; i < N; ++i) {
            const double u2 = v[i] * v[i] / (sw[i] * sw[i]);
            M += v[i] * v[i];
            K += v[i] * y[i];
            l4 += v[i] * v[i] * u2;
            l6 += v[i] * v[i] * u2 * u2;
        }
        auto r = FunctionalReport::from_parts(M, K, l4, l6);
        if (out) *out = r;
        return j_quotient(r, alpha);
    };
    FunctionalReport rep;
    double J = J_of(x, &rep);
    double tau = o.tau;
    double last_check = J;
    for (int it = 0; it < o.max_iter; ++it) {
        const double cK = 3.0 * rep.mass / ((1.0 + alpha) * rep.h1a_sq);
        const double c6 = 3.0 * alpha * rep.mass / ((1.0 + alpha) * rep.l6_6);
        const double c4 = 4.0 * rep.mass / rep.l4_4;
        std::vector<double> rhs(N);
        for (int i = 0; i < N; ++i) {
            const double u2 = x[i] * x[i] / (sw[i] * sw[i]);
            rhs[i] = x[i] - tau * (x[i] + c6 * u2 * u2 * x[i] - c4 * u2 * x[i]);
        }
        auto xn = solve_shifted(op, 1.0, tau * cK, rhs);
        normalize(xn);
        FunctionalReport rn;
        const double Jn = J_of(xn, &rn);
        if (!(Jn <= J) || !std::isfinite(Jn)) {
            tau *= 0.5;
            if (tau < 1e-8) break;
            continue;
        }
        x = std::move(xn);
        rep = rn;
        J = Jn;
        tau = std::min(tau * 1.05, 50.0);
        if (it % 200 == 199) {
            if (last_check - J <= o.tol * J) break;
            last_check = J;
        }
    }
    RadialField out(op.grid());
    for (int i = 0; i < N; ++i) out[i] = x[i] / sw[i];
    return {J, out};
}

/// min J over seeded random smooth starts.
inline JFlowResult minimize_j(const DiscreteOperator& op, double alpha, const JFlowOptions& o, int* best_start = nullptr) {
    std::mt19937_64 rng(o.seed);
    JFlowResult best;
    best.j = std::numeric_limits<double>::infinity();
    for (int s = 0; s < o.starts; ++s) {
        RandomFieldOptions ro;
        ro.amplitude_max = 1.0;
        ro.width_min = 1.5;
        ro.width_max = 6.0;
        auto f0 = random_smooth_field(op.grid(), rng, ro);
        auto res = j_flow(op, alpha, f0, o);
        if (res.j < best.j) {
            best = std::move(res);
            if (best_start) *best_start = s;
        }
    }
    return best;
}

inline SharpConstant sharp_constant(double a, double alpha, SharpMethod method, GridPtr grid,
                                    const JFlowOptions& jo = {}, const ShootOptions& so = {}) {
    OperatorSpec::make(a);
    if (!(alpha > 0)) throw ConfigError("alpha must be positive");
    SharpConstant out;
    if (a > 0.0) {
        out = sharp_constant(0.0, alpha, method, grid, jo, so);
        out.a = a;
        out.delegated = true;
        return out;
    }
    out.a = a;
    out.alpha = alpha;
    out.method = method;
    if (method == SharpMethod::closed_form) {
        const double w = find_omega_for_alpha(a, alpha, grid->nodes.front(), so);
        auto sc = shoot_continuum(a, w, grid->nodes.front(), so);
        out.omega = w;
        out.value = closed_form_constant(sc.report, alpha);
    } else {
        auto op = build_operator(a, grid);
        auto res = minimize_j(op, alpha, jo, &out.best_start);
        out.best_j = res.j;
        out.value = 1.0 / res.j;
    }
    return out;
}

/// S_a = (1/sqrt 2) Q_1(sqrt(3)/2 x) with its certified relations.
struct SState {
    RadialField profile;
    FunctionalReport report;       ///< continuum quadrature of the scaled profile
    FunctionalReport grid_report;  ///< discrete functionals of the sampled profile
    double mass_ratio = 0.0;       ///< M(S) / M(Q_1)
    double l6_ratio = 0.0;         ///< ||S||_6^6 / ||S||^2_{Hdot}
    double l4_ratio = 0.0;         ///< ||S||_4^4 / ||S||^2_{Hdot}
    double virial_rel = 0.0;       ///< V(S) / h1a_sq
    double constant_via_s = 0.0;   ///< (16/9) 3^{1/4} / ||S||_2
};

inline constexpr double s_amp = 0.70710678118654752440;  // 1/sqrt(2)
inline constexpr double s_arg = 0.86602540378443864676;  // sqrt(3)/2

inline SState build_s_state(const GroundState& q) {
    const double rat = q.report.l6_6 / q.report.h1a_sq;
    if (std::abs(rat - 1.0) > 1e-6 || !q.continuum)
        throw ConfigError("build_s_state needs the alpha = 1 optimizer (l6/h1a_sq = " + fmt_double(rat) + ")");
    SState s;
    const auto& g = q.profile.grid;
    s.profile = sample(g, [&](double r) { return s_amp * q.continuum->value(s_arg * r); });
    s.report = q.continuum->quadrature_report(s_amp, s_arg);
    s.grid_report = report(build_operator(q.a, g), s.profile);
    auto qq = q.continuum->quadrature_report();
    s.mass_ratio = s.report.mass / qq.mass;
    s.l6_ratio = s.report.l6_6 / s.report.h1a_sq;
    s.l4_ratio = s.report.l4_4 / s.report.h1a_sq;
    s.virial_rel = s.report.virial / s.report.h1a_sq;
    s.constant_via_s = 16.0 / 9.0 * std::pow(3.0, 0.25) / std::sqrt(s.report.mass);
    return s;
}

}  // namespace cqnls
