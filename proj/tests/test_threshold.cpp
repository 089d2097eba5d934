#include <gtest/gtest.h>

#include <map>

#include "cqnls/threshold.hpp"

using namespace cqnls;

namespace {
GridPtr grid() {
    static GridPtr g = build_grid(2048, 40.0);
    return g;
}

const Branch& branch0() {
    static Branch b = trace_branch(0.0, default_omega_grid(64));
    return b;
}

const ThresholdCurve& curve(double a) {
    static std::map<double, ThresholdCurve> cache;
    auto it = cache.find(a);
    if (it == cache.end()) {
        CurveOptions o;
        o.grid = grid();
        o.extension = {1.1, 1.2};
        auto b = a == 0.0 ? branch0() : trace_branch(a, default_omega_grid(64));
        it = cache.emplace(a, build_threshold_curve(a, b, o)).first;
    }
    return it->second;
}

const GroundState& q1() {
    static GroundState q = select_omega_for_alpha(0.0, 1.0, grid());
    return q;
}
}  // namespace

TEST(Branch, LogGridMostlySucceeds) {
    auto b = trace_branch(0.0, log_spaced(1e-3, 0.18, 32));
    EXPECT_GE(b.points.size(), 28u);
    EXPECT_EQ(b.points.size() + b.failures.size(), 32u);
    for (auto& p : b.points) EXPECT_LE(std::abs(p.virial), 1e-5 * p.h1a_sq) << "omega=" << p.omega;
}

TEST(Branch, KineticBoundFromEnergy) {
    for (auto& p : branch0().points) EXPECT_GE(p.energy + 3.0 / 32.0 * p.mass, p.h1a_sq / 2 - 1e-8) << p.omega;
}

TEST(Branch, RepulsiveUsesFreeCoupling) {
    auto w = log_spaced(0.01, 0.15, 6);
    auto b7 = trace_branch(0.7, w), b0 = trace_branch(0.0, w);
    EXPECT_EQ(b7.coupling, 0.0);
    ASSERT_EQ(b7.points.size(), b0.points.size());
    for (size_t i = 0; i < b0.points.size(); ++i) {
        EXPECT_EQ(b7.points[i].mass, b0.points[i].mass);
        EXPECT_EQ(b7.points[i].energy, b0.points[i].energy);
    }
}

TEST(Branch, EmptyGridRejected) { EXPECT_THROW(trace_branch(0.0, {}), ConfigError); }

TEST(Branch, FailuresRecorded) {
    auto b = trace_branch(0.0, {0.05, 0.2});
    EXPECT_EQ(b.points.size(), 1u);
    ASSERT_EQ(b.failures.size(), 1u);
    EXPECT_EQ(b.failures[0].omega, 0.2);
}

TEST(Curve, FreeCouplingStructure) {
    const auto& c = curve(0.0);
    for (auto& f : c.flags) ADD_FAILURE() << f;
    double prev = std::numeric_limits<double>::infinity();
    for (auto& s : c.samples) {
        if (s.m > c.mass_q) break;
        EXPECT_LT(s.e, prev) << "m=" << s.m;
        prev = s.e;
    }
    EXPECT_NEAR(c.energy_at(c.mass_q), 0.0, 1e-4);
    EXPECT_EQ(c.energy_at(0.5 * c.mass_s), ThresholdCurve::infinity);
    EXPECT_LE(c.energy_at(c.mass_s), c.energy_s + 1e-6);
    EXPECT_GT(c.energy_s, 0.0);
    EXPECT_NEAR(c.mass_s / c.mass_q, 4.0 / (3.0 * std::sqrt(3.0)), 1e-6);
}

TEST(Curve, EnvelopeContainsBranch) {
    const auto& c = curve(0.0);
    for (auto& p : branch0().points)
        if (p.mass >= c.mass_s && p.mass <= c.mass_q) EXPECT_LE(c.energy_at(p.mass), p.energy + 1e-9);
}

TEST(Curve, DFlowExtensionNegative) {
    const auto& c = curve(0.0);
    int n = 0;
    for (auto& s : c.samples)
        if (s.source == SampleSource::d_flow) {
            ++n;
            EXPECT_LT(s.e, -1e-4);
            // agrees with the lowest rescaled soliton at that mass up to the grid error
            EXPECT_NEAR(s.e, c.envelope->evaluate(s.m).e, 1e-3 * std::abs(s.e));
        }
    EXPECT_EQ(n, 2);
}

TEST(Curve, CouplingComparison) {
    const auto& c0 = curve(0.0);
    const auto& cm = curve(-0.1);
    EXPECT_LT(cm.mass_q, c0.mass_s);  // the shared finite-mass window is empty at a = -0.1
    int strict = 0;
    for (int i = 0; i < 16; ++i) {
        const double m = cm.mass_s + (c0.mass_q - cm.mass_s) * (i + 0.5) / 16;
        const double em = cm.energy_at(m), e0 = c0.energy_at(m);
        EXPECT_LE(em, e0 + 1e-4) << "m=" << m;
        if (em < e0) ++strict;
    }
    EXPECT_GE(strict, 12);
}

TEST(Curve, NoCoverageWithoutOmegaOne) {
    Branch b;
    b.points = trace_branch(0.0, {0.1, 0.12, 0.14}).points;
    CurveOptions o;
    o.grid = grid();
    o.extension = {};
    EXPECT_THROW(build_threshold_curve(0.0, b, o), CoverageError);
}

TEST(ComputeD, ZeroMass) { EXPECT_EQ(compute_d(0.0, 0.0, grid()).value, 0.0); }

TEST(ComputeD, VanishesBelowThreshold) {
    auto d = compute_d(0.0, 0.5 * q1().report.mass, grid(), &q1());
    EXPECT_NEAR(d.value, 0.0, 1e-4);
}

TEST(ComputeD, NegativeAboveThresholdBelowWitness) {
    const double m = 1.2 * q1().report.mass;
    auto d = compute_d(0.0, m, grid(), &q1());
    EXPECT_TRUE(d.converged);
    const double s = std::sqrt(m / q1().report.mass);
    EXPECT_LE(d.value, -1e-4);
    EXPECT_LE(d.value, -((s - 1) / 4) * q1().report.l4_4 + 1e-4);
}

TEST(ComputeD, RejectsNegativeMass) { EXPECT_THROW(compute_d(0.0, -1.0, grid()), ConfigError); }

TEST(Classify, Examples) {
    const auto& c = curve(0.0);
    EXPECT_EQ(classify(c, 0.5 * c.mass_s, 1e6).verdict, Verdict::inside_k);
    EXPECT_EQ(classify(c, c.mass_q, 0.0).verdict, Verdict::boundary);
    auto f = sample(grid(), [](double r) { return 1e-2 * std::exp(-r * r); });
    auto r = report(build_operator(0.0, grid()), f);
    EXPECT_EQ(classify(c, r.mass, r.energy).verdict, Verdict::inside_k);
    EXPECT_EQ(classify(c, 1.5 * c.mass_q, 10.0).verdict, Verdict::in_omega);
    EXPECT_EQ(classify(c, 0.5 * c.mass_s, -1.0).verdict, Verdict::outside_k);
}

TEST(Classify, Deterministic) {
    const auto& c = curve(0.0);
    for (double m : {100.0, 200.0, 230.0}) {
        auto a = classify(c, m, 0.5), b = classify(c, m, 0.5);
        EXPECT_EQ(a.verdict, b.verdict);
        EXPECT_EQ(a.threshold, b.threshold);
    }
}

TEST(Classify, InclusionAcrossCouplings) {
    const auto& c0 = curve(0.0);
    const auto& cm = curve(-0.1);
    for (int i = 1; i <= 40; ++i) {
        const double m = c0.mass_q * i / 40.0;
        for (double e : {0.01, 0.3, 0.8, 1.2, 2.0, 50.0}) {
            auto vm = classify(cm, m, e).verdict, v0 = classify(c0, m, e).verdict;
            EXPECT_FALSE(vm == Verdict::inside_k && v0 == Verdict::outside_k) << m << "," << e;
        }
    }
}

TEST(Classify, VirialPositiveInside) {
    const auto& c = curve(0.0);
    auto op = build_operator(0.0, grid());
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int inside = 0;
    for (int k = 0; k < 400 && inside < 50; ++k) {
        auto f = random_smooth_field(grid(), rng);
        auto r0 = report(op, f);
        const double scale = std::sqrt(U(rng) * c.mass_q / r0.mass);
        for (auto& v : f.values) v *= scale;
        auto r = report(op, f);
        if (classify(c, r.mass, r.energy).verdict != Verdict::inside_k) continue;
        ++inside;
        EXPECT_GT(r.virial, 0.0) << "field " << k;
    }
    EXPECT_EQ(inside, 50);
}

TEST(Classify, VirialFreeLowerBound) {
    // x f(b .) with b^2 = x (3/4 l4 - x l6) / K has V = 0; below mass_q the product
    // ||f||_Hdot ||f||_2 stays bounded away from zero
    const auto& c = curve(0.0);
    auto op = build_operator(0.0, grid());
    std::mt19937_64 rng(11);
    double lowest = std::numeric_limits<double>::infinity();
    int used = 0;
    for (int k = 0; k < 200; ++k) {
        auto r = report(op, random_smooth_field(grid(), rng));
        for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            const double x = t * 0.75 * r.l4_4 / r.l6_6;
            const double b2 = x * (0.75 * r.l4_4 - x * r.l6_6) / r.h1a_sq, b = std::sqrt(b2);
            const double M = x * r.mass / (b2 * b), K = x * r.h1a_sq / b;
            if (M >= c.mass_q) continue;
            ++used;
            lowest = std::min(lowest, std::sqrt(K * M));
        }
    }
    ASSERT_GT(used, 50);
    RecordProperty("min_h1_l2_product", std::to_string(lowest));
    EXPECT_GT(lowest, 1.0);
}

TEST(FFunctional, ZeroFieldAndOmegaBranch) {
    const auto& c = curve(0.0);
    EXPECT_EQ(f_functional(FunctionalReport{}, 0.0, c), 0.0);
    auto in_omega = FunctionalReport::from_parts(1.1 * c.mass_s, 40.0, 1.0, 1.0);
    ASSERT_EQ(classify(c, in_omega.mass, in_omega.energy).verdict, Verdict::in_omega);
    EXPECT_TRUE(std::isinf(f_functional(in_omega, 0.0, c)));
    EXPECT_THROW(f_functional(in_omega, -0.1, c), StructuralError);
}

TEST(FFunctional, LowerBoundInsideK) {
    const auto& c = curve(0.0);
    auto op = build_operator(0.0, grid());
    int inside = 0;
    for (double amp : {0.01, 0.1, 0.3, 0.6, 0.9})
        for (double w : {1.0, 2.0, 4.0}) {
            auto f = sample(grid(), [&](double r) { return cplx(amp * std::exp(-r * r / (w * w)), 0.0); });
            auto rep = report(op, f);
            if (classify(c, rep.mass, rep.energy).verdict != Verdict::inside_k) continue;
            ++inside;
            const double F = f_functional(rep, 0.0, c);
            EXPECT_TRUE(std::isfinite(F));
            EXPECT_GE(F, rep.mass / (c.mass_q - rep.mass) - 1e-6) << amp << " " << w;
        }
    EXPECT_GE(inside, 5);
}
