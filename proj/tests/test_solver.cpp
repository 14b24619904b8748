#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "nsblow/initcond.hpp"
#include "nsblow/solver.hpp"
#include "oracles.hpp"

using namespace nsblow;
using cd = std::complex<double>;

namespace {

GridSpec box(Index3 lo, Index3 hi, double h = 1.0) { return GridSpec::from_multiples(lo, hi, h); }

}  // namespace

TEST(Workspace, PaddingIsAliasFreeForWindowAndSevenSmooth) {
    const GridSpec g = box({-31, -31, -15}, {31, 31, 511});
    PaddedWorkspace<double> ws(g);
    for (int a = 0; a < 3; ++a) {
        const std::size_t p = ws.padded_extent()[a];
        const std::size_t n = g.n(a), m = static_cast<std::size_t>(-g.lo(a));
        // Wrapped sums below the window land at c + P >= m + n; those above at c - P < m.
        EXPECT_GE(p, m + n);
        EXPECT_LE(2 * n - 1 - m, p);
        std::size_t r = p;
        for (std::size_t f : {2u, 3u, 5u, 7u})
            while (r % f == 0) r /= f;
        EXPECT_EQ(r, 1u);
    }
}

TEST(Interaction, MatchesDirectSumOnAsymmetricGrid) {
    const GridSpec g = box({-3, -2, -1}, {2, 4, 6}, 0.5);
    const auto v = oracle::random_solenoidal<double>(g, 7);
    InteractionOperator<double> op(g);
    EXPECT_LT(oracle::relative_max_error(op(v), oracle::direct_interaction(v)), 1e-12);
}

TEST(Interaction, ComplexPathMatchesDirectSum) {
    const GridSpec g = box({-2, -3, -4}, {3, 2, 5});
    const auto v = oracle::random_solenoidal<cd>(g, 11);
    InteractionOperator<cd> op(g);
    EXPECT_LT(oracle::relative_max_error(op(v), oracle::direct_interaction(v)), 1e-12);
}

TEST(Interaction, GridNotContainingNegativeSide) {
    const GridSpec g = box({0, -1, 0}, {3, 2, 4});
    const auto v = oracle::random_solenoidal<double>(g, 3);
    InteractionOperator<double> op(g);
    EXPECT_LT(oracle::relative_max_error(op(v), oracle::direct_interaction(v)), 1e-12);
}

TEST(Interaction, GridNotContainingPositiveSide) {
    const GridSpec g = box({-4, -1, -2}, {0, 5, 11});
    const auto v = oracle::random_solenoidal<double>(g, 13);
    InteractionOperator<double> op(g);
    EXPECT_LT(oracle::relative_max_error(op(v), oracle::direct_interaction(v)), 1e-12);
}

// B is quadratic, so the lobe it seeds at 2a has one sign for +-v0; only +v0 then alternates.
TEST(Interaction, SecondLobeOpposesPositiveData) {
    const GridSpec g = box({-4, -4, -2}, {4, 4, 12});
    InitialDataSpec spec;
    spec.a = 5;
    spec.r = 3;
    const auto v0 = build_initial_field(spec, g);
    InteractionOperator<double> op(g);
    const auto b = op(v0);
    for (std::int64_t k1 : {1, 2}) {
        const std::size_t first = g.flat({k1 + 4, 4, 7}), second = g.flat({k1 + 4, 4, 12});
        EXPECT_GT(v0.at(0, first), 0.0);
        EXPECT_LT(b.at(0, second), 0.0);
    }
    EXPECT_EQ(spec.type(), SolutionType::II);
}

TEST(Interaction, OutputIsSolenoidalWithZeroMean) {
    const GridSpec g = box({-4, -4, -4}, {4, 4, 4});
    const auto v = oracle::random_solenoidal<double>(g, 5);
    InteractionOperator<double> op(g);
    const auto b = op(v);
    EXPECT_LT(solenoidal_defect(b), 1e-13);
    const std::size_t o = g.flat(g.origin_index());
    for (int c = 0; c < 3; ++c) EXPECT_EQ(b.at(c, o), 0.0);
}

TEST(Interaction, IsQuadraticInTheField) {
    const GridSpec g = box({-3, -3, -3}, {3, 3, 3});
    auto v = oracle::random_solenoidal<double>(g, 9);
    InteractionOperator<double> op(g);
    const auto b1 = op(v);
    for (auto& x : v.raw()) x *= -2.5;
    const auto b2 = op(v);
    for (std::size_t i = 0; i < b1.raw().size(); ++i) EXPECT_NEAR(b2.raw()[i], 6.25 * b1.raw()[i], 1e-11 * (1.0 + std::abs(b2.raw()[i])));
}

TEST(Projector, ExampleAndIdempotence) {
    const auto p = solenoidal_project<double>({1, 1, 0}, {1, 0, 0});
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], -0.5);
    EXPECT_DOUBLE_EQ(p[2], 0.0);
    const auto q = solenoidal_project<double>({1, 1, 0}, p);
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(q[i], p[i]);
    EXPECT_THROW(solenoidal_project<double>({0, 0, 0}, {1, 0, 0}), std::invalid_argument);
}

TEST(Stepper, HeatFlowIsExactPerMode) {
    const GridSpec g = box({-4, -4, -2}, {4, 4, 8});
    const auto v0 = oracle::random_solenoidal<double>(g, 13);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.nonlinear_enabled = false;
    Stepper<double> st(g, cfg);
    auto v = v0;
    for (int i = 0; i < 100; ++i) st.step(v);
    double worst = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        const double f = std::exp(-0.1 * norm2(g.wavevector(n)));
        for (int c = 0; c < 3; ++c) {
            const double want = v0.at(c, n) * f;
            if (want != 0.0) worst = std::max(worst, std::abs(v.at(c, n) - want) / std::abs(want));
        }
    }
    EXPECT_LT(worst, 1e-13);
    EXPECT_NEAR(v.t(), 0.1, 1e-15);
}

TEST(Stepper, ZeroFieldStaysZero) {
    const GridSpec g = box({-2, -2, -2}, {2, 2, 2});
    Stepper<double> st(g, SolverConfig{1e-3, 1e-12, 5, true});
    SpectralField<double> v(g);
    const auto r = st.step(v);
    EXPECT_EQ(v.max_abs(), 0.0);
    EXPECT_LE(r.corrector_iterations, 1);
}

TEST(Stepper, SecondOrderInTime) {
    const GridSpec g = box({-3, -3, -3}, {3, 3, 3});
    const auto v0 = oracle::random_solenoidal<double>(g, 17, 0.3);
    auto run = [&](double dt, int steps) {
        Stepper<double> st(g, SolverConfig{dt, 1e-14, 100, true});
        auto v = v0;
        for (int i = 0; i < steps; ++i) st.step(v);
        return v;
    };
    const auto ref = run(2.5e-4, 80);
    const double e1 = max_abs_diff(run(4e-3, 5), ref);
    const double e2 = max_abs_diff(run(2e-3, 10), ref);
    EXPECT_GT(e1 / e2, 3.0);  // ~4 for a second-order scheme
}

TEST(Stepper, DivergentCorrectorLeavesStateUntouched) {
    const GridSpec g = box({-2, -2, -2}, {2, 2, 2});
    auto v = oracle::random_solenoidal<double>(g, 19, 1e4);
    const auto before = v;
    Stepper<double> st(g, SolverConfig{1.0, 1e-12, 3, true});
    try {
        st.step(v);
        FAIL() << "expected a step failure";
    } catch (const StepFailure& f) {
        EXPECT_EQ(f.report().corrector_iterations, 3);
    }
    EXPECT_TRUE(v == before);
}

TEST(Stepper, ComplexPathOnRealDataStaysReal) {
    const GridSpec g = box({-3, -3, -2}, {3, 3, 5});
    const auto vr = oracle::random_solenoidal<double>(g, 23, 0.5);
    auto vc = to_complex(vr);
    auto v = vr;
    Stepper<double> sr(g, SolverConfig{1e-3, 1e-13, 50, true});
    Stepper<cd> sc(g, SolverConfig{1e-3, 1e-13, 50, true});
    for (int i = 0; i < 5; ++i) {
        sr.step(v);
        sc.step(vc);
    }
    double imag = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < v.raw().size(); ++i) {
        imag = std::max(imag, std::abs(vc.raw()[i].imag()));
        diff = std::max(diff, std::abs(vc.raw()[i].real() - v.raw()[i]));
    }
    EXPECT_LT(imag, 1e-12 * v.max_abs());
    EXPECT_LT(diff, 1e-12 * v.max_abs());
}

TEST(SolverConfig, RejectsInvalidValues) {
    EXPECT_THROW((SolverConfig{0.0, 1e-8, 50, true}.validate()), ConfigError);
    EXPECT_THROW((SolverConfig{1e-7, -1.0, 50, true}.validate()), ConfigError);
    EXPECT_THROW((SolverConfig{1e-7, 1e-8, 0, true}.validate()), ConfigError);
}
