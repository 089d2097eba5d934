#include <gtest/gtest.h>

#include "cqnls/functionals.hpp"
#include "cqnls/random_fields.hpp"

using namespace cqnls;

namespace {
double rel(double x, double ref) { return std::abs(x - ref) / std::abs(ref); }
const double G2 = std::pow(pi / 2, 1.5), G4 = std::pow(pi / 4, 1.5), G6 = std::pow(pi / 6, 1.5);

RadialField gaussian(GridPtr g, double amp = 1.0) {
    return sample(g, [amp](double r) { return amp * std::exp(-r * r); });
}
}  // namespace

TEST(Report, ZeroField) {
    auto g = build_grid(512, 20.0);
    auto r = report(build_operator(0.0, g), RadialField(g));
    EXPECT_EQ(r.mass, 0.0);
    EXPECT_EQ(r.energy, 0.0);
    EXPECT_EQ(r.virial, 0.0);
    EXPECT_EQ(r.h1a_sq, 0.0);
    EXPECT_EQ(r.l4_4, 0.0);
    EXPECT_EQ(r.l6_6, 0.0);
}

TEST(Report, GaussianClosedForms) {
    auto g = build_grid(2048, 40.0);
    auto f = gaussian(g);
    auto r0 = report(build_operator(0.0, g), f);
    EXPECT_LT(rel(r0.mass, G2), 1e-12);
    EXPECT_LT(rel(r0.l4_4, G4), 1e-12);
    EXPECT_LT(rel(r0.l6_6, G6), 1e-12);
    EXPECT_LT(rel(r0.h1a_sq, 3 * G2), 3e-4);  // second-order form, h = 40/2048
    EXPECT_NEAR(r0.energy, r0.h1a_sq / 2 - r0.l4_4 / 4 + r0.l6_6 / 6, 1e-12);
    EXPECT_NEAR(r0.virial, r0.h1a_sq + r0.l6_6 - 0.75 * r0.l4_4, 1e-12);

    auto r1 = report(build_operator(1.0, g), f);
    EXPECT_LT(rel(r1.h1a_sq, 3 * G2 + pi * std::sqrt(2 * pi)), 3e-4);
    EXPECT_EQ(r1.mass, r0.mass);
    EXPECT_EQ(r1.l4_4, r0.l4_4);
}

TEST(Report, RejectsNonFinite) {
    auto g = build_grid(64, 5.0);
    RadialField f(g);
    f[3] = cplx(std::nan(""), 0.0);
    EXPECT_THROW(report(build_operator(0.0, g), f), DataError);
}

TEST(Report, GridMismatch) {
    auto g1 = build_grid(64, 5.0), g2 = build_grid(128, 5.0);
    EXPECT_THROW(report(build_operator(0.0, g1), RadialField(g2)), StructuralError);
}

TEST(Report, CompletedSquareAndYoung) {
    auto g = build_grid(2048, 40.0);
    std::mt19937_64 rng(0);
    for (double a : {-0.2, -0.1, 0.0, 0.5, 1.0}) {
        auto op = build_operator(a, g);
        for (int t = 0; t < 20; ++t) {
            RandomFieldOptions o;
            o.amplitude_max = 2.0;
            o.complex_valued = t % 2;
            auto f = random_smooth_field(g, rng, o);
            auto r = report(op, f);
            EXPECT_GE(r.energy + 3.0 / 32.0 * r.mass, r.h1a_sq / 2 - 1e-10);
            EXPECT_LE(r.l4_4 / 4, 3.0 / 8.0 * r.mass + r.l6_6 / 6 + 1e-12);
            EXPECT_LE(r.h1a_sq / 2, r.energy + 3.0 / 8.0 * r.mass + 1e-10);
        }
    }
    // the integrand-level form on an extreme sample
    for (double x : {0.0, 0.3, 0.8660254037844386, 1.0, 3.0}) {
        const double p = x * x;
        EXPECT_LE(p * p / 4, 3.0 / 32.0 * p + p * p * p / 6 + 1e-15);
    }
}

TEST(Report, MonotoneInCoupling) {
    auto g = build_grid(2048, 40.0);
    std::mt19937_64 rng(1);
    const std::vector<double> as = {-0.24, -0.2, -0.1, -0.05, 0.0, 0.1, 0.5, 1.0};
    for (int t = 0; t < 10; ++t) {
        auto f = random_smooth_field(g, rng);
        double E = -1e300, V = -1e300;
        for (double a : as) {
            auto r = report(build_operator(a, g), f);
            EXPECT_GE(r.energy, E - 1e-12) << "a=" << a;
            EXPECT_GE(r.virial, V - 1e-12) << "a=" << a;
            E = r.energy;
            V = r.virial;
        }
    }
}

TEST(Report, CsvRow) {
    auto r = FunctionalReport::from_parts(1.0, 2.0, 3.0, 4.0);
    EXPECT_EQ(std::string(report_csv_header()), "mass,energy,virial,h1a_sq,l4_4,l6_6");
    EXPECT_EQ(report_csv_row(r).substr(0, 2), "1,");
}

TEST(JQuotient, ZeroFieldUndefined) {
    auto g = build_grid(64, 5.0);
    EXPECT_THROW(j_quotient(build_operator(0.0, g), RadialField(g), 1.0), DomainError);
}

TEST(JQuotient, InvariantUnderTwoParameterScaling) {
    // exact invariance on the functional values
    auto g = build_grid(2048, 40.0);
    auto op = build_operator(0.0, g);
    auto r = report(op, gaussian(g));
    for (double alpha : {0.5, 1.0, 2.0}) {
        for (auto law : {ScalingLaw::two_parameter(0.7, 1.3), ScalingLaw::two_parameter(2.0, 0.6)}) {
            auto f = law.factors();
            auto rs = FunctionalReport::from_parts(r.mass * f[0], r.h1a_sq * f[1], r.l4_4 * f[2], r.l6_6 * f[3]);
            EXPECT_LT(rel(j_quotient(rs, alpha), j_quotient(r, alpha)), 1e-12);
        }
    }
    // and on actually rescaled samples
    auto f0 = gaussian(g);
    auto f1 = apply_scaling(f0, ScalingLaw::two_parameter(0.7, 1.3));
    EXPECT_LT(rel(j_quotient(op, f1, 1.0), j_quotient(op, f0, 1.0)), 1e-4);
}

TEST(Scaling, IdentityAndRejections) {
    auto g = build_grid(256, 20.0);
    auto f = gaussian(g);
    for (auto law : {ScalingLaw::mass_preserving(1.0), ScalingLaw::l4_tilting(1.0), ScalingLaw::two_parameter(1.0, 1.0)}) {
        auto h = apply_scaling(f, law);
        for (int i = 0; i < g->size(); ++i) EXPECT_EQ(h[i], f[i]);
    }
    EXPECT_THROW(apply_scaling(f, ScalingLaw::mass_preserving(0.0)), ConfigError);
    EXPECT_THROW(apply_scaling(f, ScalingLaw::two_parameter(-1.0, 1.0)), ConfigError);
}

TEST(Scaling, MassPreservingLaws) {
    auto g = build_grid(2048, 40.0);
    auto op = build_operator(0.0, g);
    auto f = gaussian(g);
    auto r0 = report(op, f);
    auto r2 = report(op, apply_scaling(f, ScalingLaw::mass_preserving(2.0)));
    EXPECT_LT(rel(r2.mass, r0.mass), 1e-4);
    EXPECT_LT(rel(r2.l6_6, 64 * r0.l6_6), 1e-3);
    EXPECT_LT(rel(r2.l4_4, 8 * r0.l4_4), 1e-3);
    EXPECT_LT(rel(r2.h1a_sq, 4 * r0.h1a_sq), 1e-3);
    auto rh = report(op, apply_scaling(f, ScalingLaw::mass_preserving(0.5)));
    EXPECT_LT(rel(rh.mass, r0.mass), 1e-4);
    EXPECT_LT(rel(rh.h1a_sq, 0.25 * r0.h1a_sq), 1e-3);
}

TEST(Scaling, TiltingAndTwoParameterLaws) {
    auto g = build_grid(2048, 40.0);
    for (double a : {-0.1, 0.0, 1.0}) {
        auto op = build_operator(a, g);
        auto f = gaussian(g);
        auto r0 = report(op, f);
        for (auto law : {ScalingLaw::l4_tilting(1.5), ScalingLaw::two_parameter(0.8, 1.25)}) {
            auto fac = law.factors();
            auto r1 = report(op, apply_scaling(f, law));
            EXPECT_LT(rel(r1.mass, r0.mass * fac[0]), 1e-4);
            EXPECT_LT(rel(r1.l4_4, r0.l4_4 * fac[2]), 1e-4);
            EXPECT_LT(rel(r1.l6_6, r0.l6_6 * fac[3]), 1e-4);
            EXPECT_LT(rel(r1.h1a_sq, r0.h1a_sq * fac[1]), 1e-3) << "a=" << a;
        }
    }
}

TEST(Interpolant, TailAndOrigin) {
    auto g = build_grid(1024, 20.0);
    const double kap = 0.7;
    auto f = sample(g, [kap](double r) { return std::exp(-kap * r) / r * (1 - std::exp(-r * r)); });
    f[g->size() - 1] = std::exp(-kap * 20.0) / 20.0;
    FieldInterpolant ip(f);
    EXPECT_NEAR(std::abs(ip(25.0)) / (std::exp(-kap * 25.0) / 25.0), 1.0, 1e-3);
    EXPECT_NEAR(ip(3.3).real(), std::exp(-kap * 3.3) / 3.3 * (1 - std::exp(-3.3 * 3.3)), 1e-6);
}
