#include <gtest/gtest.h>

#include <map>

#include "cqnls/ground_state.hpp"

using namespace cqnls;

namespace {
double rel(double x, double ref) { return std::abs(x - ref) / std::abs(ref); }

GridPtr graded() {
    static GridPtr g = build_grid(2048, 60.0, Grading::graded);
    return g;
}

const GroundState& q1(double a) {
    static std::map<double, GroundState> cache;
    auto it = cache.find(a);
    if (it == cache.end()) it = cache.emplace(a, select_omega_for_alpha(a, 1.0, graded())).first;
    return it->second;
}

void expect_certified(const GroundState& q) {
    EXPECT_LE(std::abs(q.pohozaev_1), 1e-6);
    EXPECT_LE(std::abs(q.pohozaev_2), 1e-6);
    EXPECT_LE(std::abs(q.l4_identity), 1e-5);
    EXPECT_LE(q.discrete_residual, 1e-5);
    const auto& p = q.profile;
    for (int i = 0; i < p.grid->interior(); ++i) {
        // flat near the origin for a = 0: allow rounding-level ties
        ASSERT_GE(p[i].real(), -1e-12 * p[0].real()) << "node " << i;
        if (i > 0) ASSERT_LE(p[i].real(), p[i - 1].real() + 1e-12 * p[0].real()) << "node " << i;
    }
}
}  // namespace

TEST(Shoot, FreeCouplingCertified) {
    auto q = shoot(0.0, 0.1, build_grid(2048, 60.0));
    expect_certified(q);
    EXPECT_NEAR(q.report.l4_4 / (4 * 0.1 * q.report.mass), 1.0, 1e-5);
    EXPECT_LT(std::abs(q.report.virial), 1e-5 * q.report.h1a_sq);
}

TEST(Shoot, SweepCertified) {
    auto g = build_grid(2048, 80.0, Grading::graded);
    for (double a : {-0.2, -0.1, 0.0})
        for (double w : {0.01, 0.05, 0.12, 0.17}) {
            SCOPED_TRACE("a=" + fmt_double(a) + " omega=" + fmt_double(w));
            expect_certified(shoot(a, w, g));
        }
}

TEST(Shoot, RejectsFrequencyOutsideWindow) {
    auto g = build_grid(512, 40.0);
    EXPECT_THROW(shoot(0.0, 0.2, g), DomainError);
    EXPECT_THROW(shoot(0.0, 0.0, g), DomainError);
    EXPECT_THROW(shoot(0.0, -0.01, g), DomainError);
    EXPECT_THROW(shoot(-0.3, 0.1, g), DomainError);
}

TEST(Shoot, ErrorCategories) {
    try {
        shoot(0.0, 0.2, build_grid(512, 40.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ExitCode::usage);
    }
}

TEST(Shoot, OriginExponentFit) {
    const double a = -0.1, beta = std::sqrt(0.15) - 0.5;
    auto g = graded();
    auto q = shoot(a, 0.05, g);
    expect_certified(q);
    const double r1 = g->nodes[0];
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int i = 0; g->nodes[i] <= 1000 * r1; ++i) {
        const double x = std::log(g->nodes[i]), y = std::log(q.profile[i].real());
        sx += x, sy += y, sxx += x * x, sxy += x * y;
        ++n;
    }
    ASSERT_GE(n, 10);
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    EXPECT_NEAR(slope, beta, 0.01);
    EXPECT_NEAR(beta, -0.1127, 1e-4);
}

TEST(Shoot, ContinuumQuadratureAgreesWithIntegrator) {
    auto sc = shoot_continuum(-0.1, 0.08);
    auto qr = sc.profile->quadrature_report();
    EXPECT_LT(rel(qr.mass, sc.report.mass), 1e-8);
    EXPECT_LT(rel(qr.h1a_sq, sc.report.h1a_sq), 1e-8);
    EXPECT_LT(rel(qr.l4_4, sc.report.l4_4), 1e-8);
    EXPECT_LT(rel(qr.l6_6, sc.report.l6_6), 1e-8);
}

TEST(SelectOmega, ZeroEnergyOptimizer) {
    const auto& q = q1(0.0);
    expect_certified(q);
    ASSERT_TRUE(q.alpha.has_value());
    EXPECT_NEAR(q.report.l6_6 / q.report.h1a_sq, 1.0, 1e-6);
    EXPECT_LE(std::abs(q.report.energy), 1e-5 * q.report.h1a_sq);
    EXPECT_GT(q.omega, 0.0);
    EXPECT_LT(q.omega, omega_max);
    EXPECT_LT(q.omega, 3.0 / 32.0);
    EXPECT_TRUE(q.tight_window);
}

TEST(SelectOmega, NegativeCouplingL4Relation) {
    const auto& q = q1(-0.1);
    expect_certified(q);
    EXPECT_LT(rel(q.report.l4_4, 8.0 / 3.0 * q.report.h1a_sq), 1e-5);
}

TEST(SelectOmega, OtherAlphas) {
    for (double alpha : {0.5, 2.0}) {
        auto q = select_omega_for_alpha(0.0, alpha, graded());
        EXPECT_NEAR(q.report.l6_6 / q.report.h1a_sq, alpha, 1e-6 * alpha);
        // both Pohozaev identities give l4 = (4/3)(1+alpha) K
        EXPECT_LT(rel(q.report.l4_4, 4.0 / 3.0 * (1 + alpha) * q.report.h1a_sq), 1e-5);
        EXPECT_EQ(q.tight_window, q.omega < 3 * alpha / (16 * (1 + alpha)));
    }
}

TEST(SelectOmega, Rejections) {
    EXPECT_THROW(select_omega_for_alpha(0.3, 1.0, graded()), DomainError);
    EXPECT_THROW(select_omega_for_alpha(0.0, 0.0, graded()), ConfigError);
}

TEST(SharpConstant, ClosedFormIsNormIdentity) {
    auto c = sharp_constant(0.0, 1.0, SharpMethod::closed_form, graded());
    const auto& q = q1(0.0);
    EXPECT_LT(rel(c.value, (8.0 / 3.0) / std::sqrt(q.report.mass)), 1e-9);
}

TEST(SharpConstant, MethodsAgree) {
    auto g = build_grid(1024, 40.0, Grading::graded);
    for (double a : {0.0, -0.1}) {
        auto cf = sharp_constant(a, 1.0, SharpMethod::closed_form, g);
        auto dm = sharp_constant(a, 1.0, SharpMethod::direct, g);
        EXPECT_LT(rel(dm.value, cf.value), 1e-3) << "a=" << a;
    }
}

TEST(SharpConstant, OrderingInCoupling) {
    auto c0 = sharp_constant(0.0, 1.0, SharpMethod::closed_form, graded());
    auto cm = sharp_constant(-0.1, 1.0, SharpMethod::closed_form, graded());
    EXPECT_GE(cm.value, c0.value - 1e-3);
}

TEST(SharpConstant, RepulsiveDelegates) {
    auto c0 = sharp_constant(0.0, 1.0, SharpMethod::closed_form, graded());
    auto c5 = sharp_constant(0.5, 1.0, SharpMethod::closed_form, graded());
    EXPECT_EQ(c5.value, c0.value);
    EXPECT_TRUE(c5.delegated);
    EXPECT_EQ(c5.a, 0.5);
}

TEST(SharpConstant, InequalityOnRandomFields) {
    for (double a : {0.0, -0.1}) {
        const auto& q = q1(a);
        const double C = closed_form_constant(q.report, 1.0);
        auto op = build_operator(a, graded());
        std::mt19937_64 rng(7);
        for (int k = 0; k < 100; ++k) {
            auto f = random_smooth_field(graded(), rng);
            auto r = report(op, f);
            const double rhs = C * std::sqrt(r.mass) * std::pow(r.h1a_sq, 0.75) * std::pow(r.l6_6, 0.25);
            ASSERT_LE(r.l4_4, rhs * (1 + 1e-6)) << "field " << k;
        }
        EXPECT_LT(std::abs(C * j_quotient(op, q.profile, 1.0) - 1.0), 1e-4);
    }
}

TEST(SState, Relations) {
    for (double a : {0.0, -0.1}) {
        SCOPED_TRACE("a=" + fmt_double(a));
        const auto& q = q1(a);
        auto s = build_s_state(q);
        EXPECT_NEAR(s.mass_ratio, 4.0 / (3.0 * std::sqrt(3.0)), 1e-6 * s.mass_ratio);
        EXPECT_LE(std::abs(s.virial_rel), 1e-5);
        EXPECT_NEAR(s.l6_ratio, 1.0 / 3.0, 1e-5 / 3.0);
        // the scaling gives l4 = 16/9 of the kinetic term (see l4 = (8/3) K for Q)
        EXPECT_NEAR(s.l4_ratio, 16.0 / 9.0, 1e-5 * 16.0 / 9.0);
        EXPECT_GT(s.report.energy, 0.0);
        EXPECT_LT(rel(s.constant_via_s, closed_form_constant(q.report, 1.0)), 1e-4);
    }
}

TEST(SState, RequiresAlphaOneState) {
    auto q = shoot(0.0, 0.1, graded());
    EXPECT_THROW(build_s_state(q), ConfigError);
}
