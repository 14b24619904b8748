#include <gtest/gtest.h>

#include <cmath>

#include "nsblow/analysis.hpp"

using namespace nsblow;

namespace {

// E3-like profile: exponential envelope times a period-a modulation, on integer k3.
MarginalProfile modulated_exponential(double slope, double a, double t, int k_hi = 400) {
    MarginalProfile m;
    m.axis = 3;
    m.t = t;
    for (int k = -10; k <= k_hi; ++k) {
        m.abscissa.push_back(k);
        m.density.push_back(std::exp(3.0 + slope * k) * (1.05 + std::cos(2.0 * M_PI * k / a)));
    }
    return m;
}

}  // namespace

TEST(LeastSquares, RecoversExactLine) {
    const std::vector<double> x{0, 1, 2, 3, 4.5}, y{-1, 1, 3, 5, 8};
    const LineFit f = least_squares(x, y);
    EXPECT_NEAR(f.slope, 2.0, 1e-14);
    EXPECT_NEAR(f.intercept, -1.0, 1e-14);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
    EXPECT_NEAR(f.slope_stderr, 0.0, 1e-7);
}

TEST(LocalMaxima, StrictPeaksAndPlateaus) {
    const std::vector<double> f{0, 2, 1, 3, 3, 1, 5, 5, 5, 6, 0, 7};
    const auto idx = local_maxima(f);
    ASSERT_EQ(idx.size(), 3u);
    EXPECT_EQ(idx[0], 1u);
    EXPECT_EQ(idx[1], 3u);  // flat top counted once, leftmost point
    EXPECT_EQ(idx[2], 9u);  // endpoint 11 never qualifies
}

TEST(DecayRate, RecoversSlopeOfModulatedExponential) {
    const DecayFit f = fit_decay_rate(modulated_exponential(-0.0375, 5.0, 1e-4), 100.0);
    EXPECT_NEAR(f.slope, -0.0375, 1e-13);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
    EXPECT_GE(f.n_points, 5u);
    EXPECT_EQ(f.t, 1e-4);
}

TEST(DecayRate, MonotonePureExponentialUsesEveryPoint) {
    MarginalProfile m;
    m.axis = 3;
    for (int k = 0; k < 50; ++k) {
        m.abscissa.push_back(k);
        m.density.push_back(std::exp(-0.2 * k));
    }
    const DecayFit f = fit_decay_rate(m, 10.0);
    EXPECT_NEAR(f.slope, -0.2, 1e-13);
    EXPECT_EQ(f.n_points, 40u);
}

TEST(DecayRate, RejectsTooFewMaximaAndWrongAxis) {
    auto m = modulated_exponential(-0.05, 5.0, 0.0, 30);
    EXPECT_THROW(fit_decay_rate(m, 20.0), NumericError);
    m.axis = 1;
    EXPECT_THROW(fit_decay_rate(m, 0.0), std::invalid_argument);
}

TEST(CriticalTime, RecoversZeroOfLinearSlopeHistory) {
    const double tau = 1.63e-4, m0 = -0.08;
    std::vector<DecayFit> fits;
    for (int i = 0; i < 8; ++i) {
        const double t = 1.2e-4 + 4e-6 * i;
        fits.push_back(fit_decay_rate(modulated_exponential(m0 * (1.0 - t / tau), 5.0, t), 100.0));
    }
    const CriticalTimeEstimate e = estimate_critical_time(fits);
    EXPECT_NEAR(e.tau_star, tau, 1e-12 * tau);
    EXPECT_NEAR(e.stderr, 0.0, 1e-12);
    EXPECT_GT(e.tau_star, e.window_hi);
    EXPECT_EQ(e.n_fits, 8u);
}

TEST(CriticalTime, RejectsUnphysicalHistories) {
    std::vector<DecayFit> fits(3);
    for (int i = 0; i < 3; ++i) {
        fits[i].t = i;
        fits[i].slope = -1.0 - i;  // steepening: no zero ahead
    }
    EXPECT_THROW(estimate_critical_time(fits), NumericError);
    fits.pop_back();
    EXPECT_THROW(estimate_critical_time(fits), NumericError);
}

TEST(PowerLaw, RecoversExponentExactly) {
    const double tau = 2.0, alpha = 2.6;
    std::vector<double> t, q;
    for (int i = 0; i < 30; ++i) {
        t.push_back(1.0 + 0.03 * i);
        q.push_back(7.0 * std::pow(tau - t.back(), -alpha));
    }
    const PowerLawFit f = fit_power_law(t, q, tau, 1.1, 1.8);
    EXPECT_NEAR(f.alpha, alpha, 1e-12);
    EXPECT_NEAR(f.log_prefactor, std::log(7.0), 1e-11);
    EXPECT_EQ(f.n_points, 23u);  // t = 1.12 ... 1.78
}

TEST(PowerLaw, RejectsBadWindows) {
    const std::vector<double> t{0.1, 0.2, 0.3}, q{1, 2, 3};
    EXPECT_THROW(fit_power_law(t, q, 0.25, 0.0, 0.3), NumericError);    // window reaches tau
    EXPECT_THROW(fit_power_law(t, q, 1.0, 0.5, 0.6), NumericError);     // empty
    EXPECT_THROW(fit_power_law(t, q, 1.0, 0.15, 0.25), NumericError);   // one point
}
