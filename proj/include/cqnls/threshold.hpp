#pragma once

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cqnls/ground_state.hpp"

namespace cqnls {

inline double coupling_floor(double a) { return std::min(a, 0.0); }

// ---------------------------------------------------------------------------
// minimal energy at fixed mass

struct DOptions {
    int max_iter = 6000;
    double tau = 0.5;
    double tol = 1e-8;    ///< relative decrease of the reduced energy over 100 iterations
};

struct DResult {
    double value = 0.0;
    bool converged = true;
    int iterations = 0;
    std::string best_seed;
    RadialField best;     ///< minimizing field, rescaled to its optimal width
};

namespace detail {

/// min over s > 0 of s^2 K/2 - s^3 l4/4 + s^6 l6/6 (the mass-preserving scaling orbit).
inline std::pair<double, double> reduced_energy(double K, double l4, double l6) {
    if (!(l6 > 0) || !(l4 > 0)) return {0.0, 0.0};
    // e'(s) = s (K - 3/4 l4 s + l6 s^4); h = K - 3/4 l4 s + l6 s^4 is convex with minimum at s_m
    auto h = [&](double s) { return K - 0.75 * l4 * s + l6 * std::pow(s, 4); };
    const double sm = std::cbrt(3.0 * l4 / (16.0 * l6));
    if (h(sm) >= 0) return {0.0, 0.0};
    double lo = sm, hi = 2 * sm;
    while (h(hi) < 0) hi *= 2;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (h(mid) < 0 ? lo : hi) = mid;
    }
    const double s = hi;
    const double e = s * s * K / 2 - s * s * s * l4 / 4 + std::pow(s, 6) * l6 / 6;
    return e < 0 ? std::pair{e, s} : std::pair{0.0, 0.0};
}

}  // namespace detail

/**
 * Gradient flow on the scaling-reduced energy at fixed mass m. Each step uses
 * the gradient of E(f_s) at the optimal width s, with the kinetic part implicit,
 * then restores the mass by an amplitude projection. The field is re-centred to
 * width 1 whenever s drifts by more than a factor 1.4.
 */
inline DResult d_flow(const DiscreteOperator& op, double m, RadialField f, const DOptions& o) {
    const int N = op.dim();
    const auto& sw = op.sqrt_weights();
    DResult res;
    auto mass = [&](const std::vector<double>& v) {
        double s = 0;
        for (double t : v) s += t * t;
        return s;
    };
    auto project = [&](std::vector<double>& v) {
        const double M = mass(v);
        if (!(M > 0)) throw SolverError("d-flow: field vanished");
        const double k = std::sqrt(m / M);
        for (double& t : v) t *= k;
    };
    auto load = [&](const RadialField& g) {
        std::vector<double> v(N);
        for (int i = 0; i < N; ++i) v[i] = sw[i] * g[i].real();
        return v;
    };
    auto field = [&](const std::vector<double>& v) {
        RadialField g(op.grid());
        for (int i = 0; i < N; ++i) g[i] = v[i] / sw[i];
        return g;
    };
    auto eval = [&](const std::vector<double>& v) {
        std::vector<double> y;
        op.apply_sym(v, y);
        double K = 0, l4 = 0, l6 = 0;
        for (int i = 0; i < N; ++i) {
            const double u2 = v[i] * v[i] / (sw[i] * sw[i]);
            K += v[i] * y[i];
            l4 += v[i] * v[i] * u2;
            l6 += v[i] * v[i] * u2 * u2;
        }
        return detail::reduced_energy(K, l4, l6);
    };

    std::vector<double> x = load(f);
    project(x);
    auto [E, s] = eval(x);
    double tau = o.tau, last = E;
    res.converged = false;
    int it = 0;
    for (; it < o.max_iter; ++it) {
        if (E == 0.0) {
            // the whole scaling orbit has nonnegative energy; the reduced energy is flat here
            res.converged = true;
            break;
        }
        if (s > 1.4 || s < 1 / 1.4) {
            auto g = apply_scaling(field(x), ScalingLaw::mass_preserving(s));
            x = load(g);
            project(x);
            std::tie(E, s) = eval(x);
            continue;
        }
        std::vector<double> rhs(N);
        const double s3 = s * s * s, s6 = s3 * s3;
        for (int i = 0; i < N; ++i) {
            const double u2 = x[i] * x[i] / (sw[i] * sw[i]);
            rhs[i] = x[i] - tau * (-s3 * u2 * x[i] + s6 * u2 * u2 * x[i]);
        }
        auto xn = solve_shifted(op, 1.0, tau * s * s, rhs);
        project(xn);
        auto [En, sn] = eval(xn);
        if (!(En <= E)) {
            tau *= 0.5;
            if (tau < 1e-10) break;
            continue;
        }
        x = std::move(xn);
        E = En;
        s = sn;
        tau = std::min(tau * 1.1, 1e3);
        if (it % 100 == 99) {
            if (last - E <= o.tol * std::abs(E)) {
                res.converged = true;
                break;
            }
            last = E;
        }
    }
    res.value = E;
    res.iterations = it;
    res.best = s > 0 ? apply_scaling(field(x), ScalingLaw::mass_preserving(s)) : field(x);
    return res;
}

/**
 * d_a(m): infimum of E_{a^0} over M(f) = m, best of several seeds. The
 * seeds are Gaussians of three widths, plus sqrt(m / M(Q1)) Q1 when the alpha = 1
 * optimizer is supplied on the same grid.
 */
inline DResult compute_d(double a, double m, GridPtr grid, const GroundState* q1 = nullptr, const DOptions& o = {}) {
    if (!(m >= 0) || !std::isfinite(m)) throw ConfigError("compute_d: mass must be nonnegative");
    DResult best;
    if (m == 0.0) {
        best.best = RadialField(grid);
        best.best_seed = "zero";
        return best;
    }
    auto op = build_operator(coupling_floor(a), grid);
    std::vector<std::pair<std::string, RadialField>> seeds;
    for (double w : {1.5, 3.0, 6.0})
        seeds.emplace_back("gaussian-" + fmt_double(w), sample(grid, [w](double r) { return std::exp(-r * r / (w * w)); }));
    if (q1 && q1->profile.grid->same_as(*grid)) seeds.emplace_back("witness", q1->profile);
    best.value = std::numeric_limits<double>::infinity();
    for (auto& [name, f] : seeds) {
        auto r = d_flow(op, m, f, o);
        if (r.value < best.value) {
            best = std::move(r);
            best.best_seed = name;
        }
    }
    best.value = std::min(best.value, 0.0);
    return best;
}

// ---------------------------------------------------------------------------
// soliton branch

struct BranchPoint {
    double omega = 0.0;
    double mass = 0.0;
    double energy = 0.0;
    double virial = 0.0;
    double h1a_sq = 0.0;
    double l4_4 = 0.0;
    double l6_6 = 0.0;
};

struct BranchFailure {
    double omega;
    std::string reason;
};

struct Branch {
    double a = 0.0;         ///< requested coupling
    double coupling = 0.0;  ///< a^0 used for the solves
    std::vector<BranchPoint> points;
    std::vector<BranchFailure> failures;
};

inline BranchPoint branch_point(double coupling, double omega, const ShootOptions& so = {}) {
    auto sc = shoot_continuum(coupling, omega, 1e-3, so);
    const auto& r = sc.report;
    if (std::abs(sc.pohozaev_1) > 1e-6 || std::abs(sc.pohozaev_2) > 1e-6 || std::abs(sc.l4_identity) > 1e-5)
        throw SolverError("Pohozaev certification failed");
    if (std::abs(r.virial) > 1e-5 * r.h1a_sq) throw SolverError("virial residual above 1e-5 h1a_sq");
    return {omega, r.mass, r.energy, r.virial, r.h1a_sq, r.l4_4, r.l6_6};
}

inline std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = n == 1 ? lo : lo * std::pow(hi / lo, double(i) / (n - 1));
    return w;
}

/// Default frequency grid: log-spaced on [1e-3, 0.18].
inline std::vector<double> default_omega_grid(int n = 64) { return log_spaced(1e-3, 0.18, n); }

inline Branch trace_branch(double a, const std::vector<double>& omegas, const ShootOptions& so = {}) {
    if (omegas.empty()) throw ConfigError("trace_branch: empty omega grid");
    OperatorSpec::make(a);
    Branch b;
    b.a = a;
    b.coupling = coupling_floor(a);
    for (double w : omegas) {
        try {
            b.points.push_back(branch_point(b.coupling, w, so));
        } catch (const Error& e) {
            b.failures.push_back({w, e.what()});
        }
    }
    std::sort(b.points.begin(), b.points.end(), [](auto& p, auto& q) { return p.omega < q.omega; });
    return b;
}

// ---------------------------------------------------------------------------
// threshold curve E_a(m)

/**
 * @brief Lowest energy at mass m over virial-free rescalings of the soliton branch.
 *
 * For a stationary state Q_omega the two-parameter family x Q(b .) keeps
 * V = 0 when b^2 = x (3/4 l4 - x l6) / K, with x the squared amplitude. Fixing the
 * mass leaves two members (x Q(b .) on either side of x* = 3 l4 / (16 l6)); the
 * envelope minimizes their energy over omega. At x = 1 the member is Q itself,
 * and at omega_1, x = 1/2 it is S.
 */
class Envelope {
public:
    struct Member {
        double e = std::numeric_limits<double>::infinity();
        double omega = 0.0;
        double x = 0.0;
        double b = 0.0;
    };

    Envelope(double coupling, std::vector<BranchPoint> pts, ShootOptions so = {})
        : coupling_(coupling), so_(so) {
        for (auto& p : pts) cache_.emplace(p.omega, p);
        for (auto& [w, p] : cache_) base_.push_back(p);
        if (base_.size() < 3) throw CoverageError("envelope needs at least three branch points");
    }

    double omega_lo() const { return base_.front().omega; }
    double omega_hi() const { return base_.back().omega; }

    /// Smallest mass in the virial-free family of one branch point.
    static double min_mass(const BranchPoint& p) {
        const double xs = 3.0 * p.l4_4 / (16.0 * p.l6_6);
        return p.mass * std::pow(p.h1a_sq, 1.5) / std::sqrt(g(p, xs));
    }

    /// Lowest-energy member of the family of p with mass m (infinite if m below its range).
    static Member member(const BranchPoint& p, double m) {
        Member best;
        best.omega = p.omega;
        const double xs = 3.0 * p.l4_4 / (16.0 * p.l6_6), xe = 0.75 * p.l4_4 / p.l6_6;
        const double target = std::log(p.mass * p.mass * std::pow(p.h1a_sq, 3) / (m * m));
        auto lg = [&](double x) { return std::log(g(p, x)) - target; };
        if (lg(xs) < 0) return best;
        auto solve = [&](double lo, double hi) {
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                const bool up = lg(lo) < 0;
                ((lg(mid) < 0) == up ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        };
        for (double x : {solve(xs * 1e-300 + 1e-300, xs), solve(xs, xe)}) {
            const double b2 = x * (0.75 * p.l4_4 - x * p.l6_6) / p.h1a_sq;
            if (!(b2 > 0)) continue;
            const double b = std::sqrt(b2);
            const double e = (x * x * p.l4_4 / 8.0 - x * x * x * p.l6_6 / 3.0) / (b2 * b);
            if (e < best.e) {
                best.e = e;
                best.x = x;
                best.b = b;
            }
        }
        return best;
    }

    /// Minimum over omega: scan of the input branch points, then Brent in log omega.
    Member evaluate(double m) {
        std::vector<std::pair<double, Member>> scan;
        for (auto& p : base_) scan.emplace_back(p.omega, member(p, m));
        size_t k = 0;
        for (size_t i = 1; i < scan.size(); ++i)
            if (scan[i].second.e < scan[k].second.e) k = i;
        Member best = scan[k].second;
        if (!std::isfinite(best.e)) return best;
        const double lo = std::log(scan[k > 0 ? k - 1 : 0].first);
        const double hi = std::log(scan[std::min(k + 1, scan.size() - 1)].first);
        if (hi > lo) {
            auto f = [&](double lw) { return member(point(std::exp(lw)), m).e; };
            boost::uintmax_t iters = 60;
            auto r = boost::math::tools::brent_find_minima(f, lo, hi, 40, iters);
            if (r.second < best.e) best = member(point(std::exp(r.first)), m);
        }
        return best;
    }

    BranchPoint point(double omega) {
        {
            std::lock_guard<std::mutex> lk(mu_);
            auto it = cache_.find(omega);
            if (it != cache_.end()) return it->second;
        }
        try {
            auto p = branch_point(coupling_, omega, so_);
            std::lock_guard<std::mutex> lk(mu_);
            cache_.emplace(omega, p);
            return p;
        } catch (const Error&) {
            BranchPoint bad;
            bad.omega = omega;
            bad.mass = std::numeric_limits<double>::infinity();
            bad.l4_4 = bad.l6_6 = bad.h1a_sq = 1.0;
            return bad;
        }
    }

private:
    static double g(const BranchPoint& p, double x) { return x * std::pow(0.75 * p.l4_4 - x * p.l6_6, 3); }

    double coupling_;
    ShootOptions so_;
    std::vector<BranchPoint> base_;
    std::map<double, BranchPoint> cache_;  // base points plus shots made during refinement
    std::mutex mu_;
};

enum class SampleSource { branch, rescaled, d_flow, anchor };

inline std::string to_string(SampleSource s) {
    switch (s) {
        case SampleSource::branch: return "branch";
        case SampleSource::rescaled: return "rescaled";
        case SampleSource::d_flow: return "d-flow";
        default: return "anchor";
    }
}

struct CurveSample {
    double m = 0.0;
    double e = 0.0;
    double omega = 0.0;  ///< soliton the sample comes from (0 for d-flow samples)
    SampleSource source = SampleSource::branch;
};

struct CurveOptions {
    int samples = 64;
    std::vector<double> extension = {1.05, 1.1, 1.2, 1.3};  ///< d-flow masses, in units of mass_q
    GridPtr grid;                                            ///< for the alpha = 1 optimizer and compute_d
    DOptions d;
    ShootOptions shoot;
};

struct ThresholdCurve {
    double a = 0.0;
    double coupling = 0.0;
    double mass_s = 0.0;
    double mass_q = 0.0;
    double energy_s = 0.0;  ///< E_{a^0}(S_a)
    double omega_1 = 0.0;
    std::vector<CurveSample> samples;
    std::vector<BranchPoint> branch;
    std::vector<std::string> flags;  ///< monotonicity violations, folds, d-flow non-convergence
    std::shared_ptr<Envelope> envelope;

    static constexpr double infinity = std::numeric_limits<double>::infinity();

    /// E_a(m): +inf below mass_s, the envelope up to mass_q, d-flow samples above.
    double energy_at(double m) const {
        if (m < mass_s) return infinity;
        if (!envelope) return interpolate(m);
        if (m <= mass_q) return std::min(envelope->evaluate(m).e, energy_s);
        std::vector<const CurveSample*> ext;
        for (auto& s : samples)
            if (s.source == SampleSource::d_flow || (s.source == SampleSource::anchor && s.m == mass_q)) ext.push_back(&s);
        for (size_t i = 0; i + 1 < ext.size(); ++i)
            if (m >= ext[i]->m && m <= ext[i + 1]->m) {
                const double t = (m - ext[i]->m) / (ext[i + 1]->m - ext[i]->m);
                return (1 - t) * ext[i]->e + t * ext[i + 1]->e;
            }
        return envelope->evaluate(m).e;
    }

    /// Piecewise-linear interpolation of the samples, continued along the last segment.
    double interpolate(double m) const {
        if (samples.empty()) throw ConfigError("threshold curve has no samples");
        if (samples.size() == 1) return samples[0].e;
        size_t i = 0;
        while (i + 2 < samples.size() && m > samples[i + 1].m) ++i;
        const auto &p = samples[i], &q = samples[i + 1];
        return p.e + (q.e - p.e) * (m - p.m) / (q.m - p.m);
    }
};

inline ThresholdCurve build_threshold_curve(double a, const Branch& branch, const CurveOptions& o) {
    if (branch.points.empty()) throw ConfigError("build_threshold_curve: empty branch");
    if (!o.grid) throw ConfigError("build_threshold_curve: grid required");
    ThresholdCurve c;
    c.a = a;
    c.coupling = coupling_floor(a);
    c.branch = branch.points;

    auto q1 = select_omega_for_alpha(c.coupling, 1.0, o.grid, o.shoot);
    auto s = build_s_state(q1);
    c.omega_1 = q1.omega;
    c.mass_q = q1.report.mass;
    c.mass_s = s.report.mass;
    c.energy_s = s.report.energy;

    double wlo = std::numeric_limits<double>::infinity(), whi = 0.0;
    for (auto& p : branch.points) wlo = std::min(wlo, p.omega), whi = std::max(whi, p.omega);
    if (q1.omega < wlo || q1.omega > whi)
        throw CoverageError("branch omega range [" + fmt_double(wlo) + ", " + fmt_double(whi) +
                            "] does not contain omega_1 = " + fmt_double(q1.omega));

    auto pts = branch.points;
    pts.push_back({q1.omega, q1.report.mass, q1.report.energy, q1.report.virial, q1.report.h1a_sq, q1.report.l4_4,
                   q1.report.l6_6});
    c.envelope = std::make_shared<Envelope>(c.coupling, pts, o.shoot);

    std::vector<std::string> gaps;
    c.samples.push_back({c.mass_s, c.energy_s, q1.omega, SampleSource::anchor});
    const int n = std::max(o.samples, 2);
    for (int i = 1; i < n - 1; ++i) {
        const double m = c.mass_s + (c.mass_q - c.mass_s) * i / (n - 1);
        auto mem = c.envelope->evaluate(m);
        if (!std::isfinite(mem.e)) {
            gaps.push_back(fmt_double(m));
            continue;
        }
        const bool on_branch = std::abs(mem.x - 1.0) < 1e-4;
        c.samples.push_back({m, mem.e, mem.omega, on_branch ? SampleSource::branch : SampleSource::rescaled});
    }
    if (!gaps.empty()) {
        std::string msg = "branch does not cover masses:";
        for (auto& gm : gaps) msg += " " + gm;
        throw CoverageError(msg);
    }
    c.samples.push_back({c.mass_q, q1.report.energy, q1.omega, SampleSource::anchor});

    for (size_t i = 1; i < c.samples.size(); ++i)
        if (!(c.samples[i].e < c.samples[i - 1].e))
            c.flags.push_back("energy not strictly decreasing at m=" + fmt_double(c.samples[i].m));

    for (double f : o.extension) {
        auto d = compute_d(c.coupling, f * c.mass_q, o.grid, &q1, o.d);
        if (!d.converged) c.flags.push_back("d-flow not converged at m=" + fmt_double(f * c.mass_q));
        c.samples.push_back({f * c.mass_q, d.value, 0.0, SampleSource::d_flow});
    }
    return c;
}

inline const char* curve_csv_header() { return "m,e,omega,source"; }

inline SampleSource parse_sample_source(const std::string& s) {
    for (auto k : {SampleSource::branch, SampleSource::rescaled, SampleSource::d_flow, SampleSource::anchor})
        if (to_string(k) == s) return k;
    throw DataError("unknown sample source '" + s + "'");
}

inline std::string curve_csv(const ThresholdCurve& c) {
    std::string s = std::string(curve_csv_header()) + "\n";
    for (auto& p : c.samples)
        s += fmt_double(p.m) + "," + fmt_double(p.e) + "," + fmt_double(p.omega) + "," + to_string(p.source) + "\n";
    return s;
}

/**
 * Curve from its CSV form. The two anchors give M(S_a) and M(Q_1); without the
 * soliton data the result answers energy_at by linear interpolation.
 */
inline ThresholdCurve read_curve_csv(std::istream& is, double a) {
    ThresholdCurve c;
    c.a = a;
    c.coupling = coupling_floor(a);
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != curve_csv_header()) throw DataError("curve file: expected header '" + std::string(curve_csv_header()) + "'");
            header = true;
            continue;
        }
        std::stringstream ss(line);
        std::string f[4];
        for (auto& x : f)
            if (!std::getline(ss, x, ',')) throw DataError("malformed curve row: '" + line + "'");
        CurveSample smp;
        try {
            smp = {std::stod(f[0]), std::stod(f[1]), std::stod(f[2]), parse_sample_source(f[3])};
        } catch (const std::logic_error&) {
            throw DataError("malformed curve row: '" + line + "'");
        }
        c.samples.push_back(smp);
    }
    std::vector<const CurveSample*> anchors;
    for (auto& s : c.samples)
        if (s.source == SampleSource::anchor) anchors.push_back(&s);
    if (anchors.size() == 2) {
        c.mass_s = anchors[0]->m;
        c.energy_s = anchors[0]->e;
        c.mass_q = anchors[1]->m;
        c.omega_1 = anchors[1]->omega;
    } else if (!c.samples.empty()) {
        throw DataError("curve file must carry exactly two anchor samples");
    }
    return c;
}

// ---------------------------------------------------------------------------
// region queries

enum class Verdict { inside_k, outside_k, in_omega, boundary };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::inside_k: return "inside-K_a";
        case Verdict::outside_k: return "outside-K_a";
        case Verdict::in_omega: return "in-Omega_a";
        default: return "boundary-tolerance";
    }
}

struct RegionQuery {
    double m = 0.0;
    double e = 0.0;
    double threshold = 0.0;  ///< E_a(m)
    Verdict verdict = Verdict::outside_k;
};

inline constexpr double region_tolerance = 1e-8;

inline RegionQuery classify(const ThresholdCurve& c, double m, double e, double tol = region_tolerance) {
    RegionQuery q{m, e, c.energy_at(m), Verdict::outside_k};
    const double E = q.threshold;
    const bool finite = std::isfinite(E);
    const bool near_curve = finite && std::abs(e - E) <= tol * std::max(1.0, std::abs(E));
    const bool near_mq = std::abs(m - c.mass_q) <= tol * c.mass_q && e >= -tol && (!finite || e <= E + tol);
    const bool near_ms = m >= c.mass_s * (1 - tol) && m < c.mass_s * (1 + tol) && e > 0;
    if (near_curve || near_mq || near_ms) {
        q.verdict = Verdict::boundary;
    } else if (m > 0 && m < c.mass_q && e > 0 && e < E) {
        q.verdict = Verdict::inside_k;
    } else if (m >= c.mass_s && finite && e >= E) {
        q.verdict = Verdict::in_omega;
    }
    return q;
}

// ---------------------------------------------------------------------------
// induction functional

/// Euclidean distance from (m, e) to the boundary of Omega_a, with the
/// threshold curve taken piecewise linear between its samples.
inline double omega_distance(const ThresholdCurve& c, double m, double e) {
    if (c.samples.empty()) throw ConfigError("omega_distance: empty curve");
    auto seg = [&](double x0, double y0, double x1, double y1, bool ray) {
        const double dx = x1 - x0, dy = y1 - y0, L2 = dx * dx + dy * dy;
        double t = L2 > 0 ? ((m - x0) * dx + (e - y0) * dy) / L2 : 0.0;
        t = std::max(t, 0.0);
        if (!ray) t = std::min(t, 1.0);
        return std::hypot(m - x0 - t * dx, e - y0 - t * dy);
    };
    const auto& s = c.samples;
    // vertical edge m = M(S_a) going up from the first sample
    double d = seg(s[0].m, s[0].e, s[0].m, s[0].e + 1.0, true);
    for (size_t i = 0; i + 1 < s.size(); ++i) d = std::min(d, seg(s[i].m, s[i].e, s[i + 1].m, s[i + 1].e, false));
    if (s.size() >= 2) {
        const auto& p = s[s.size() - 2];
        const auto& q = s.back();
        d = std::min(d, seg(q.m, q.e, 2 * q.m - p.m, 2 * q.e - p.e, true));
    }
    return d;
}

/// F(f) = E + (M + E)/dist((M, E), Omega_a) outside Omega_a, +inf inside.
inline double f_functional(const FunctionalReport& r, double a, const ThresholdCurve& c) {
    if (a != c.a) throw StructuralError("f_functional: curve built for a=" + fmt_double(c.a) + ", report for a=" + fmt_double(a));
    if (r.mass >= c.mass_s && r.energy >= c.energy_at(r.mass)) return ThresholdCurve::infinity;
    if (r.mass == 0.0) return 0.0;
    return r.energy + (r.mass + r.energy) / omega_distance(c, r.mass, r.energy);
}

}  // namespace cqnls
