#include <gtest/gtest.h>

#include <random>

#include "cqnls/operator.hpp"

using namespace cqnls;

namespace {

double rel(double x, double ref) { return std::abs(x - ref) / std::abs(ref); }

RadialField gaussian(GridPtr g, double amp = 1.0) {
    return sample(g, [amp](double r) { return amp * std::exp(-r * r); });
}

RadialField random_smooth(GridPtr g, std::mt19937_64& rng, bool complex_valued) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double a1 = U(rng), a2 = U(rng), w1 = 1 + 3 * U(rng), w2 = 1 + 3 * U(rng), k = 2 * U(rng);
    return sample(g, [&](double r) {
        double m = a1 * std::exp(-r * r / (w1 * w1)) + a2 * (r / w2) * std::exp(-r * r / (w2 * w2));
        return complex_valued ? m * std::polar(1.0, k * r) : cplx(m);
    });
}

}  // namespace

TEST(Grid, UniformSpacingAndBallVolume) {
    auto g = build_grid(1024, 40.0, Grading::uniform);
    EXPECT_EQ(g->size(), 1024);
    EXPECT_DOUBLE_EQ(g->nodes.back(), 40.0);
    EXPECT_NEAR(g->nodes[1] - g->nodes[0], 40.0 / 1024, 1e-14);
    const double vol = integrate(*g, [](double) { return 1.0; });
    EXPECT_LT(rel(vol, 4.0 / 3.0 * pi * 64000.0), 1e-6);
}

TEST(Grid, MinimalGrid) {
    auto g = build_grid(16, 1.0, Grading::uniform);
    EXPECT_EQ(g->size(), 16);
    EXPECT_DOUBLE_EQ(g->nodes.back(), 1.0);
    for (int i = 1; i < 16; ++i) EXPECT_GT(g->nodes[i], g->nodes[i - 1]);
    for (double w : g->weights) EXPECT_GT(w, 0.0);
}

TEST(Grid, GradedGaussianQuadrature) {
    auto g = build_grid(2048, 40.0, Grading::graded);
    EXPECT_GT(g->nodes[0], 0.0);
    EXPECT_LT(g->nodes[0], 1e-4);
    EXPECT_DOUBLE_EQ(g->nodes.back(), 40.0);
    const double q = integrate(*g, [](double r) { return std::exp(-2 * r * r); });
    EXPECT_LT(rel(q, std::pow(pi / 2, 1.5)), 1e-8);
}

TEST(Grid, PolynomialMoments) {
    for (auto gr : {Grading::uniform, Grading::graded}) {
        auto g = build_grid(2048, 40.0, gr);
        for (int k = 0; k <= 2; ++k) {
            const double q = integrate(*g, [k](double r) { return std::pow(r, k); });
            const double exact = 4 * pi * std::pow(40.0, k + 3) / (k + 3);
            EXPECT_LT(rel(q, exact), 1e-6) << "k=" << k;
        }
    }
}

TEST(Grid, RejectsBadInput) {
    EXPECT_THROW(build_grid(15, 1.0), ConfigError);
    EXPECT_THROW(build_grid(64, 0.0), ConfigError);
    EXPECT_THROW(build_grid(64, -1.0), ConfigError);
}

TEST(Operator, IndicialData) {
    auto s = OperatorSpec::make(-0.1);
    EXPECT_NEAR(s.beta, std::sqrt(0.15) - 0.5, 1e-15);
    EXPECT_NEAR(s.rho, -s.beta, 0.0);
    EXPECT_NEAR(s.q0, 3.0 / s.rho, 1e-12);
    EXPECT_TRUE(std::isinf(OperatorSpec::make(0.0).q0));
    EXPECT_EQ(OperatorSpec::make(0.0).beta, 0.0);
    EXPECT_GT(OperatorSpec::make(1.0).beta, 0.0);
    EXPECT_THROW(OperatorSpec::make(-0.3), DomainError);
    EXPECT_THROW(OperatorSpec::make(-0.25), DomainError);
}

TEST(Operator, SmallestDirichletEigenvalue) {
    auto op = build_operator(0.0, build_grid(2048, 40.0));
    const auto& es = op.eigensystem();
    const double lam1 = es.values.front();
    EXPECT_GE(lam1, 0.0);
    EXPECT_LE(lam1, std::pow(pi / 40.0, 2) * 1.01);
}

TEST(Operator, DiscreteHardyPositivity) {
    auto g = build_grid(2048, 40.0);
    for (double a : {-0.24, -0.2, -0.1, 0.0, 1.0}) {
        auto op = build_operator(a, g);
        EXPECT_GE(op.eigensystem().values.front(), -1e-8) << "a=" << a;
    }
}

TEST(Operator, RejectsSupercritical) { EXPECT_THROW(build_operator(-0.3, build_grid(64, 1.0)), DomainError); }

TEST(Operator, ApplyZero) {
    auto g = build_grid(512, 20.0);
    auto op = build_operator(0.3, g);
    auto y = apply_operator(op, RadialField(g));
    for (auto& z : y.values) EXPECT_EQ(z, cplx(0.0));
}

TEST(Operator, ApplyGaussianFreeLaplacian) {
    auto g = build_grid(2048, 40.0, Grading::graded);
    auto op = build_operator(0.0, g);
    auto y = apply_operator(op, gaussian(g));
    for (int i = 0; i < g->interior(); ++i) {
        const double r = g->nodes[i];
        EXPECT_NEAR(y[i].real(), (6 - 4 * r * r) * std::exp(-r * r), 1e-3) << "r=" << r;
    }
}

TEST(Operator, ApplyGaussianUniformTruncationBound) {
    // three-point error h^2/12 * v''''/r with v = r exp(-r^2): largest at the origin, 5 h^2
    auto g = build_grid(2048, 40.0);
    auto op = build_operator(0.0, g);
    auto y = apply_operator(op, gaussian(g));
    const double h = g->nodes[0];
    double worst = 0.0;
    for (int i = 0; i < g->interior(); ++i) {
        const double r = g->nodes[i];
        worst = std::max(worst, std::abs(y[i].real() - (6 - 4 * r * r) * std::exp(-r * r)));
    }
    EXPECT_LE(worst, 5.0 * h * h * 1.01);
}

TEST(Operator, ApplyGaussianWithPotential) {
    auto g = build_grid(2048, 40.0, Grading::graded);
    auto op0 = build_operator(0.0, g);
    auto op1 = build_operator(1.0, g);
    auto f = gaussian(g);
    auto y0 = apply_operator(op0, f);
    auto y1 = apply_operator(op1, f);
    // node 0 also carries the lumped origin cell of the potential
    for (int i = 1; i < g->interior(); ++i) {
        const double r = g->nodes[i];
        const double ex = (6 - 4 * r * r) * std::exp(-r * r) + std::exp(-r * r) / (r * r);
        EXPECT_NEAR(y1[i].real(), ex, 1e-3 + 1e-15 * std::abs(ex)) << "r=" << r;
        if (r < 5.0)
            EXPECT_NEAR(y1[i].real() - y0[i].real(), std::exp(-r * r) / (r * r), 1e-9 * std::exp(-r * r) / (r * r))
                << "r=" << r;
    }
}

TEST(Operator, IndicialPotentialMatchesInverseSquare) {
    auto g = build_grid(2048, 40.0);
    auto op = build_operator(-0.2, g);
    const double h = g->nodes[0];
    for (int i = 0; i < g->interior() - 2; ++i) {
        const double r = g->nodes[i];
        EXPECT_NEAR(op.potential()[i] / g->mu[i], -0.2 / (r * r), 0.16 * h * h / std::pow(r, 4) + 1e-14);
    }
}

TEST(Operator, IndicialBranchIsHarmonic) {
    auto g = build_grid(1024, 20.0, Grading::graded);
    auto op = build_operator(-0.1, g);
    const double b = op.spec().beta;
    auto f = sample(g, [b](double r) { return std::pow(r, b); });
    auto y = apply_operator(op, f);
    for (int i = 0; i < g->interior() - 1; ++i)
        EXPECT_NEAR(std::abs(y[i]), 0.0, 1e-9 * std::abs(f[i]) / std::pow(g->nodes[i], 2));
}

TEST(Operator, SymmetryOfQuadraticForm) {
    auto g = build_grid(2048, 40.0);
    std::mt19937_64 rng(0);
    for (double a : {-0.2, 0.0, 1.0}) {
        auto op = build_operator(a, g);
        for (int t = 0; t < 5; ++t) {
            auto f = random_smooth(g, rng, false), h = random_smooth(g, rng, false);
            cplx lhs = inner(apply_operator(op, f), h);
            cplx rhs = std::conj(inner(apply_operator(op, h), f));
            EXPECT_LT(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(lhs)));
        }
    }
}

TEST(Operator, QuadraticFormMatchesApply) {
    auto g = build_grid(1024, 30.0);
    auto op = build_operator(0.5, g);
    auto f = gaussian(g);
    EXPECT_NEAR(op.quadratic_form(f), inner(apply_operator(op, f), f).real(), 1e-12);
}

TEST(Propagator, IdentityAtZero) {
    auto g = build_grid(256, 20.0);
    auto op = build_operator(0.0, g);
    auto f = gaussian(g);
    auto y = linear_propagate(op, f, 0.0);
    for (int i = 0; i < g->size(); ++i) EXPECT_EQ(y[i], f[i]);
}

TEST(Propagator, UnitarityAndGroupLaw) {
    auto g = build_grid(2048, 40.0);
    auto op = build_operator(-0.1, g);
    std::mt19937_64 rng(1);
    auto f = random_smooth(g, rng, true);
    const double m0 = l2_norm_sq(f);
    for (double tau : {0.3, 1.0, 7.5}) EXPECT_LT(rel(l2_norm_sq(linear_propagate(op, f, tau)), m0), 1e-12);
    auto a = linear_propagate(op, linear_propagate(op, f, 0.7), 1.6);
    auto b = linear_propagate(op, f, 2.3);
    double diff = 0.0;
    for (int i = 0; i < g->size(); ++i) diff += g->weights[i] * std::norm(a[i] - b[i]);
    EXPECT_LT(std::sqrt(diff / m0), 1e-10);
}

TEST(Propagator, EigenvectorPhase) {
    auto g = build_grid(2048, 40.0);
    auto op = build_operator(0.0, g);
    const auto& es = op.eigensystem();
    std::vector<cplx> z(op.dim());
    for (int i = 0; i < op.dim(); ++i) z[i] = es.vectors[i];
    auto f = op.from_sym(z);
    auto y = linear_propagate(op, f, 1.0);
    const cplx ph = std::polar(1.0, -es.values[0]);
    for (int i = 0; i < op.dim(); ++i) EXPECT_LT(std::abs(y[i] - ph * f[i]), 1e-12);
}

TEST(Propagator, ChebyshevMatchesSpectral) {
    auto g = build_grid(2048, 40.0);
    for (double a : {-0.2, 0.0, 1.0}) {
        auto op = build_operator(a, g);
        std::mt19937_64 rng(2);
        auto f = random_smooth(g, rng, true);
        for (double tau : {1e-3, -5e-4, 0.02}) {
            ChebyshevPropagator cp(op, tau);
            auto a1 = cp.apply(f);
            auto a2 = linear_propagate(op, f, tau);
            double d = 0.0;
            for (int i = 0; i < g->size(); ++i) d += g->weights[i] * std::norm(a1[i] - a2[i]);
            EXPECT_LT(std::sqrt(d / l2_norm_sq(f)), 1e-12) << "a=" << a << " tau=" << tau;
        }
    }
}

TEST(Solvers, ShiftedTridiagonal) {
    auto g = build_grid(512, 20.0);
    auto op = build_operator(-0.1, g);
    std::vector<double> b(op.dim());
    for (int i = 0; i < op.dim(); ++i) b[i] = std::sin(0.01 * i);
    auto x = solve_shifted(op, 1.0, 0.3, b);
    std::vector<double> y;
    op.apply_sym(x, y);
    for (int i = 0; i < op.dim(); ++i) EXPECT_NEAR(x[i] + 0.3 * y[i], b[i], 1e-10);
}
