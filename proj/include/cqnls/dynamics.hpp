#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cqnls/functionals.hpp"
#include "cqnls/ground_state.hpp"

namespace cqnls {

enum class Mode { cubic_quintic, quintic_only, linear_only };

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::cubic_quintic: return "cubic-quintic";
        case Mode::quintic_only: return "quintic-only";
        default: return "linear-only";
    }
}

inline Mode parse_mode(const std::string& s) {
    if (s == "cubic-quintic") return Mode::cubic_quintic;
    if (s == "quintic-only") return Mode::quintic_only;
    if (s == "linear-only") return Mode::linear_only;
    throw ConfigError("unknown mode '" + s + "' (cubic-quintic, quintic-only, linear-only)");
}

struct EvolutionConfig {
    double a = 0.0;
    double dt = 1e-3;
    double t_end = 10.0;
    double virial_R = 10.0;
    Mode mode = Mode::cubic_quintic;
    int checkpoint_every = 100;
    double gap_start_fraction = 0.75;  ///< scatter_gap is measured from t0 = fraction * t_end

    long steps() const { return std::llround(t_end / dt); }

    void validate(const RadialGrid& g) const {
        OperatorSpec::make(a);
        if (!(dt > 0) || dt > 1e-2) throw ConfigError("dt must lie in (0, 1e-2]");
        if (!(t_end > 0)) throw ConfigError("t_end must be positive");
        if (std::abs(steps() * dt - t_end) > 1e-9 * t_end) throw ConfigError("t_end must be a multiple of dt");
        if (!(virial_R > 0) || virial_R > g.r_max / 2) throw ConfigError("virial_R must lie in (0, r_max/2]");
        if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be a positive integer");
        if (!(gap_start_fraction > 0 && gap_start_fraction < 1)) throw ConfigError("gap_start_fraction must be in (0, 1)");
    }
};

// ---------------------------------------------------------------------------
// splitting

/// In-place exact flow of the nonlinear part over time theta, on grid samples.
inline void nonlinear_phase(std::vector<cplx>& u, double theta, Mode mode) {
    if (mode == Mode::linear_only) return;
    for (auto& z : u) {
        const double p = std::norm(z);
        const double rate = mode == Mode::cubic_quintic ? p - p * p : -p * p;
        z *= std::polar(1.0, theta * rate);
    }
}

/**
 * @brief Strang splitting for i u_t = L_a u - |u|^2 u + |u|^4 u.
 *
 * Half nonlinear phase, exact linear step exp(-i dt T) by Chebyshev series,
 * half nonlinear phase.
 */
class Stepper {
public:
    Stepper(const DiscreteOperator& op, double dt, Mode mode) : op_(&op), dt_(dt), mode_(mode), lin_(op, dt) {}

    double dt() const { return dt_; }

    /// One step on symmetric coordinates x = sqrt(w) u.
    void step_sym(std::vector<cplx>& x) const {
        const auto& sw = op_->sqrt_weights();
        const int N = op_->dim();
        if (mode_ != Mode::linear_only) {
            for (int i = 0; i < N; ++i) x[i] /= sw[i];
            nonlinear_phase(x, 0.5 * dt_, mode_);
            for (int i = 0; i < N; ++i) x[i] *= sw[i];
        }
        lin_.apply(x);
        if (mode_ != Mode::linear_only) {
            for (int i = 0; i < N; ++i) x[i] /= sw[i];
            nonlinear_phase(x, 0.5 * dt_, mode_);
            for (int i = 0; i < N; ++i) x[i] *= sw[i];
        }
    }

    RadialField step(const RadialField& u) const {
        require_same_grid(u, *op_->grid(), "step");
        auto x = op_->to_sym(u);
        step_sym(x);
        auto out = op_->from_sym(x);
        if (!out.finite()) throw SolverError("step: non-finite state (instability)");
        return out;
    }

private:
    const DiscreteOperator* op_;
    double dt_;
    Mode mode_;
    ChebyshevPropagator lin_;
};

inline RadialField step(const DiscreteOperator& op, const RadialField& u, double dt, Mode mode) {
    if (!u.finite()) throw DataError("step: input has non-finite samples");
    return Stepper(op, dt, mode).step(u);
}

// ---------------------------------------------------------------------------
// localized virial

/**
 * psi(rho) = rho^2 on [0,1], constant 31/14 beyond 2, and on [1,2] the degree-8
 * polynomial in s = rho - 1 that matches rho^2 to fourth order at 1 and has
 * psi' vanishing to fourth order at 2.
 */
struct VirialProfile {
    static constexpr std::array<double, 9> c = {1.0, 2.0, 1.0, 0.0, 0.0, -22.0, 43.0, -212.0 / 7.0, 7.5};
    static constexpr double plateau = 31.0 / 14.0;

    /// k-th derivative of psi at rho (k = 0..4).
    static double eval(double rho, int k) {
        if (rho <= 1.0) {
            const double v[5] = {rho * rho, 2 * rho, 2.0, 0.0, 0.0};
            return v[k];
        }
        if (rho >= 2.0) return k == 0 ? plateau : 0.0;
        const double s = rho - 1.0;
        double acc = 0.0;
        for (int j = static_cast<int>(c.size()) - 1; j >= k; --j) {
            double f = 1.0;
            for (int q = 0; q < k; ++q) f *= (j - q);
            acc = acc * s + c[j] * f;
        }
        return acc;
    }
};

/// phi(x) = R^2 psi(|x|/R) and the radial derivatives the virial identity needs.
struct VirialWeight {
    double R = 1.0;
    GridPtr grid;
    std::vector<double> phi, d1, d2, d3, d4, lap, bilap;  ///< at the nodes
    std::vector<double> phi_edge_d2;                       ///< phi'' at edge midpoints (edge 0 starts at r = 0)

    double phi_at(double r) const { return R * R * VirialProfile::eval(r / R, 0); }
};

inline VirialWeight build_virial_weight(GridPtr g, double R) {
    if (!(R > 0) || R > g->r_max / 2) throw ConfigError("virial weight: R must lie in (0, r_max/2]");
    VirialWeight w;
    w.R = R;
    w.grid = g;
    const int n = g->size();
    for (auto* v : {&w.phi, &w.d1, &w.d2, &w.d3, &w.d4, &w.lap, &w.bilap}) v->resize(n);
    w.phi_edge_d2.resize(n);
    for (int i = 0; i < n; ++i) {
        const double r = g->nodes[i], rho = r / R;
        w.phi[i] = R * R * VirialProfile::eval(rho, 0);
        w.d1[i] = R * VirialProfile::eval(rho, 1);
        w.d2[i] = VirialProfile::eval(rho, 2);
        w.d3[i] = VirialProfile::eval(rho, 3) / R;
        w.d4[i] = VirialProfile::eval(rho, 4) / (R * R);
        w.lap[i] = w.d2[i] + 2 * w.d1[i] / r;
        w.bilap[i] = w.d4[i] + 4 * w.d3[i] / r;
        const double rl = i == 0 ? 0.0 : g->nodes[i - 1];
        w.phi_edge_d2[i] = VirialProfile::eval(0.5 * (rl + r) / R, 2);
    }
    return w;
}

struct VirialValues {
    double I = 0.0;
    double Idot = 0.0;
    double Iddot = 0.0;
};

/**
 * I = int phi |u|^2 and its first two time derivatives along the flow,
 * written on v = r u edge by edge so that phi = r^2 reproduces Iddot = 8 V
 * with the discrete V exactly.
 */
inline VirialValues virial_monitor(const DiscreteOperator& op, const RadialField& u, const VirialWeight& w,
                                   Mode mode = Mode::cubic_quintic) {
    const auto& g = *op.grid();
    require_same_grid(u, g, "virial_monitor");
    if (!w.grid || !w.grid->same_as(g)) throw StructuralError("virial_monitor: weight lives on a different grid");
    const int N = op.dim();
    const auto& nodes = g.nodes;
    const auto& p = op.potential();
    VirialValues out;
    double edge_grad = 0.0, edge_cur = 0.0;
    for (int i = 0; i <= N - 1 + 1 && i < g.size(); ++i) {
        // edge from node i-1 (or the origin) to node i
        const double rl = i == 0 ? 0.0 : nodes[i - 1], rr = nodes[i];
        const cplx vl = i == 0 ? cplx(0) : rl * u[i - 1], vr = i < N ? rr * u[i] : cplx(0);
        const double h = rr - rl;
        const double phil = i == 0 ? 0.0 : w.phi[i - 1];
        edge_grad += w.phi_edge_d2[i] * std::norm(vr - vl) / h;
        edge_cur += (w.phi[i] - phil) / h * std::imag(std::conj(vl) * vr);
    }
    double pot = 0.0, third = 0.0, nl = 0.0, bil = 0.0;
    for (int i = 0; i < N; ++i) {
        const double r = nodes[i], q = std::norm(u[i]), wi = g.weights[i];
        out.I += wi * w.phi[i] * q;
        third += w.d3[i] * r * q * g.mu[i];
        pot += w.d1[i] / r * p[i] * r * r * q;
        double dens = 0.0;
        switch (mode) {
            case Mode::cubic_quintic: dens = 4.0 / 3.0 * q * q * q - q * q; break;
            case Mode::quintic_only: dens = 4.0 / 3.0 * q * q * q; break;
            default: break;
        }
        nl += wi * w.lap[i] * dens;
        bil += wi * w.bilap[i] * q;
    }
    out.Idot = 8 * pi * edge_cur;
    out.Iddot = 16 * pi * edge_grad + 16 * pi * third + 16 * pi * pot + nl - bil;
    return out;
}

// ---------------------------------------------------------------------------
// evolution

struct EvolutionTrace {
    std::vector<double> times, mass, energy, virial, I, Idot, Iddot, l4, l10d, scatter_gap;
    std::vector<double> h1a_sq;
    double t0_gap = 0.0;              ///< reference time of scatter_gap (0 before it)
    double max_mass_drift = 0.0;      ///< relative
    double max_energy_drift = 0.0;    ///< relative to K/2 + l4/4 + l6/6 at t = 0
    double min_virial = 0.0;
    bool boundary_polluted = false;
    double polluted_at = -1.0;
    std::vector<std::string> violations;
    RadialField final_state;
    RadialField gap_reference;        ///< u(t0)
    bool complete = true;

    size_t size() const { return times.size(); }
};

inline const char* trace_csv_header() { return "t,mass,energy,virial,I,Idot,Iddot,l4,l10d,scatter_gap"; }

inline std::string trace_csv(const EvolutionTrace& tr) {
    std::string s = std::string(trace_csv_header()) + "\n";
    for (size_t k = 0; k < tr.size(); ++k) {
        for (const auto* col : {&tr.times, &tr.mass, &tr.energy, &tr.virial, &tr.I, &tr.Idot, &tr.Iddot, &tr.l4, &tr.l10d,
                                &tr.scatter_gap}) {
            if (col != &tr.times) s += ",";
            s += fmt_double((*col)[k]);
        }
        s += "\n";
    }
    return s;
}

/// Instability during evolve; carries the trace up to the last finite checkpoint.
struct InstabilityError : SolverError {
    std::shared_ptr<EvolutionTrace> partial;
    InstabilityError(const std::string& w, std::shared_ptr<EvolutionTrace> tr) : SolverError(w), partial(std::move(tr)) {}
};

/// Energy functional of the chosen mode: E = K/2 - l4/4 + l6/6 with the absent terms dropped.
inline double mode_energy(const FunctionalReport& r, Mode mode) {
    switch (mode) {
        case Mode::cubic_quintic: return r.energy;
        case Mode::quintic_only: return r.h1a_sq / 2 + r.l6_6 / 6;
        default: return r.h1a_sq / 2;
    }
}

/// ||u - v||_{H^1} with the Hdot^1_a quadratic form.
inline double h1_distance(const DiscreteOperator& op, const RadialField& u, const RadialField& v) {
    RadialField d(u.grid);
    for (int i = 0; i < d.size(); ++i) d[i] = u[i] - v[i];
    return std::sqrt(l2_norm_sq(d) + op.quadratic_form(d));
}

/// Called at every checkpoint with (t, u(t)).
using CheckpointObserver = std::function<void(double, const RadialField&)>;

inline EvolutionTrace evolve(const EvolutionConfig& cfg, const RadialField& u0, const CheckpointObserver& observe = {}) {
    const auto& g = u0.grid;
    cfg.validate(*g);
    if (!u0.finite()) throw DataError("evolve: initial state has non-finite samples");
    auto op = build_operator(cfg.a, g);
    auto weight = build_virial_weight(g, cfg.virial_R);
    Stepper st(op, cfg.dt, cfg.mode);
    const long n = cfg.steps();
    const long n_gap = std::llround(cfg.gap_start_fraction * n);

    auto tr = std::make_shared<EvolutionTrace>();
    tr->t0_gap = n_gap * cfg.dt;
    const double r_pollute = 0.8 * g->r_max;

    FunctionalReport rep0 = report(op, u0);
    const double escale = rep0.h1a_sq / 2 + rep0.l4_4 / 4 + rep0.l6_6 / 6;
    const double E0 = mode_energy(rep0, cfg.mode);

    auto record = [&](long k, const RadialField& u) {
        const double t = k * cfg.dt;
        auto r = k == 0 ? rep0 : report(op, u);
        auto vv = virial_monitor(op, u, weight, cfg.mode);
        double l10 = 0.0, outer = 0.0;
        for (int i = 0; i < g->interior(); ++i) {
            const double q = std::norm(u[i]);
            l10 += g->weights[i] * q * q * q * q * q;
            if (g->nodes[i] > r_pollute) outer += g->weights[i] * q;
        }
        double gap = 0.0;
        if (k > n_gap) gap = h1_distance(op, u, linear_propagate(op, tr->gap_reference, t - tr->t0_gap));
        tr->times.push_back(t);
        tr->mass.push_back(r.mass);
        tr->energy.push_back(mode_energy(r, cfg.mode));
        tr->virial.push_back(r.virial);
        tr->h1a_sq.push_back(r.h1a_sq);
        tr->I.push_back(vv.I);
        tr->Idot.push_back(vv.Idot);
        tr->Iddot.push_back(vv.Iddot);
        tr->l4.push_back(r.l4_4);
        tr->l10d.push_back(l10);
        tr->scatter_gap.push_back(gap);
        if (observe) observe(t, u);

        const double md = rep0.mass > 0 ? std::abs(r.mass - rep0.mass) / rep0.mass : 0.0;
        const double ed = escale > 0 ? std::abs(mode_energy(r, cfg.mode) - E0) / escale : 0.0;
        tr->max_mass_drift = std::max(tr->max_mass_drift, md);
        tr->max_energy_drift = std::max(tr->max_energy_drift, ed);
        if (md > 1e-8 * t + 1e-13)
            tr->violations.push_back("mass drift " + fmt_double(md) + " at t=" + fmt_double(t));
        if (ed > 1e-6 * t + 1e-12)
            tr->violations.push_back("energy drift " + fmt_double(ed) + " at t=" + fmt_double(t));
        if (!tr->boundary_polluted && outer > 1e-8 * r.mass) {
            tr->boundary_polluted = true;
            tr->polluted_at = t;
        }
    };

    auto x = op.to_sym(u0);
    if (n_gap == 0) tr->gap_reference = u0;
    record(0, u0);
    for (long k = 1; k <= n; ++k) {
        st.step_sym(x);
        if (k == n_gap) tr->gap_reference = op.from_sym(x);
        if (k % cfg.checkpoint_every == 0 || k == n) {
            auto u = op.from_sym(x);
            if (!u.finite()) {
                tr->complete = false;
                throw InstabilityError("evolve: non-finite state at t=" + fmt_double(k * cfg.dt), tr);
            }
            record(k, u);
            if (k == n) tr->final_state = std::move(u);
        }
    }
    tr->min_virial = *std::min_element(tr->virial.begin(), tr->virial.end());
    return std::move(*tr);
}

// ---------------------------------------------------------------------------
// scattering proxy

enum class ScatterVerdict { scatter_like, soliton_like, inconclusive };

inline std::string to_string(ScatterVerdict v) {
    switch (v) {
        case ScatterVerdict::scatter_like: return "scatter-like";
        case ScatterVerdict::soliton_like: return "soliton-like";
        default: return "inconclusive";
    }
}

struct ScatterReport {
    ScatterVerdict verdict = ScatterVerdict::inconclusive;
    double l4_decay = 1.0;         ///< max l4 / final l4
    bool l4_tail_decayed = false;  ///< every l4 sample from t0 on is below max l4 / decay threshold
    double final_gap = 0.0;        ///< relative to sqrt(M + K) at t0
    double l4_variation = 0.0;     ///< (max - min) / max of l4 over the run
    std::string reason;
};

struct ScatterThresholds {
    double min_t_end = 20.0;
    double decay = 10.0;
    double gap = 1e-3;
    double stationary = 1e-3;
};

inline ScatterReport scattering_diagnostics(const EvolutionTrace& tr, const ScatterThresholds& th = {}) {
    ScatterReport r;
    if (tr.size() < 2 || tr.times.back() < th.min_t_end) {
        r.reason = "trace too short (t_end < " + fmt_double(th.min_t_end) + ")";
        return r;
    }
    const double lmax = *std::max_element(tr.l4.begin(), tr.l4.end());
    const double lmin = *std::min_element(tr.l4.begin(), tr.l4.end());
    const double lend = tr.l4.back();
    if (lmax == 0.0) {
        r.verdict = ScatterVerdict::scatter_like;
        r.l4_decay = std::numeric_limits<double>::infinity();
        r.reason = "zero field";
        return r;
    }
    r.l4_decay = lend > 0 ? lmax / lend : std::numeric_limits<double>::infinity();
    r.l4_variation = (lmax - lmin) / lmax;
    size_t k0 = 0;
    while (k0 < tr.size() && tr.times[k0] < tr.t0_gap) ++k0;
    const double tail_max = k0 < tr.size() ? *std::max_element(tr.l4.begin() + k0, tr.l4.end()) : lend;
    r.l4_tail_decayed = tail_max * th.decay <= lmax;
    const double scale = std::sqrt(tr.mass[k0 < tr.size() ? k0 : 0] + tr.h1a_sq[k0 < tr.size() ? k0 : 0]);
    r.final_gap = scale > 0 ? tr.scatter_gap.back() / scale : 0.0;
    if (r.l4_decay >= th.decay && r.l4_tail_decayed && r.final_gap <= th.gap) {
        r.verdict = ScatterVerdict::scatter_like;
        r.reason = "l4 decayed by " + fmt_double(r.l4_decay) + ", free-flow gap " + fmt_double(r.final_gap);
    } else if (r.l4_variation <= th.stationary) {
        r.verdict = ScatterVerdict::soliton_like;
        r.reason = "l4 stationary to " + fmt_double(r.l4_variation);
    } else {
        r.reason = "l4 decay " + fmt_double(r.l4_decay) + ", gap " + fmt_double(r.final_gap) + ", variation " +
                   fmt_double(r.l4_variation);
    }
    return r;
}

// ---------------------------------------------------------------------------
// initial data

/**
 * Presets: "gaussian:A[,w]" for A exp(-r^2/w^2), "soliton:omega" for the ground state
 * Q_omega (coupling a^0 for a > 0 is not available: the profile would not be a
 * stationary state), "soliton-perturbed:omega,eps" for (1 + eps) Q_omega.
 */
inline RadialField make_initial(const std::string& spec, double a, GridPtr g) {
    auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string::npos) {
        std::stringstream ss(spec.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                size_t used = 0;
                args.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ConfigError("bad preset argument '" + tok + "' in '" + spec + "'");
            }
        }
    }
    auto need = [&](size_t lo, size_t hi) {
        if (args.size() < lo || args.size() > hi) throw ConfigError("wrong number of arguments for preset '" + name + "'");
    };
    if (name == "gaussian") {
        need(1, 2);
        const double A = args[0], w = args.size() > 1 ? args[1] : 1.0;
        if (!(w > 0)) throw ConfigError("gaussian width must be positive");
        return sample(g, [&](double r) { return A * std::exp(-r * r / (w * w)); });
    }
    if (name == "soliton" || name == "soliton-perturbed") {
        need(name == "soliton" ? 1 : 2, name == "soliton" ? 1 : 2);
        auto q = shoot(a, args[0], g);
        const double k = name == "soliton" ? 1.0 : 1.0 + args[1];
        for (auto& v : q.profile.values) v *= k;
        return q.profile;
    }
    throw ConfigError("unknown initial-data preset '" + name + "' (gaussian, soliton, soliton-perturbed)");
}

}  // namespace cqnls
