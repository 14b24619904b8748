#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "nsblow/diagnostics.hpp"
#include "nsblow/solver.hpp"
#include "oracles.hpp"

using namespace nsblow;
using cd = std::complex<double>;

namespace {

GridSpec small_grid() { return GridSpec::from_multiples({-3, -2, -2}, {3, 3, 4}, 1.0); }

// u(x) evaluated literally from the defining sum, one point at a time.
std::array<cd, 3> u_direct(const SpectralField<double>& v, const Vec3& x) {
    const GridSpec& g = v.grid();
    std::array<cd, 3> u{};
    for (std::size_t n = 0; n < g.size(); ++n) {
        const Vec3 k = g.wavevector(n);
        const cd ph = std::exp(cd(0.0, -dot(k, x)));
        for (int c = 0; c < 3; ++c) u[c] += cd(0.0, -g.weight()) * v.at(c, n) * ph;
    }
    return u;
}

XMesh point_stencil(const Vec3& x0, double dx) {
    XMesh m;
    for (int a = 0; a < 3; ++a) m.axes[a] = {x0[a] - dx, dx, 3};
    return m;
}

}  // namespace

TEST(Densities, ZeroFieldHasZeroTotals) {
    const SpectralField<double> v(small_grid());
    const Totals t = totals(v);
    EXPECT_EQ(t.energy, 0.0);
    EXPECT_EQ(t.enstrophy, 0.0);
}

TEST(Densities, SingleNodeEnstrophyToEnergyRatio) {
    const GridSpec g = GridSpec::from_multiples({-1, -1, -1}, {1, 1, 6}, 1.0);
    SpectralField<double> v(g);
    v.at(0, g.flat(g.index_of({0, 0, 5}))) = 1.0;
    const Totals t = totals(v);
    EXPECT_NEAR(t.enstrophy / t.energy, 2.0 * 25.0, 1e-12);
}

TEST(Physical, SingleNodeIsOnePlaneWave) {
    const GridSpec g = small_grid();
    SpectralField<double> v(g);
    const Vec3 ks{2, -1, 3};
    const std::size_t n = g.flat(g.index_of(ks));
    v.set_vec(n, {0.3, -0.2, 0.7});
    const XMesh xm = periodic_xmesh(g, {8, 8, 10});
    const PhysicalField u = to_physical(v, xm);
    for (std::size_t j0 = 0; j0 < 8; j0 += 3)
        for (std::size_t j1 = 0; j1 < 8; j1 += 3)
            for (std::size_t j2 = 0; j2 < 10; ++j2) {
                const Vec3 x{xm.axes[0].at(j0), xm.axes[1].at(j1), xm.axes[2].at(j2)};
                const cd ph = cd(0.0, -1.0) * std::exp(cd(0.0, -dot(ks, x)));
                for (int c = 0; c < 3; ++c) EXPECT_LT(std::abs(u.comp[c][u.flat(j0, j1, j2)] - ph * v.at(c, n)), 1e-14);
            }
}

TEST(Physical, MatchesLiteralSumOffMesh) {
    const GridSpec g = small_grid();
    const auto v = oracle::random_solenoidal<double>(g, 41);
    const Vec3 x0{0.31, -0.17, 0.05};
    const XMesh xm = point_stencil(x0, 0.1);
    const PhysicalField u = to_physical(v, xm);
    const auto want = u_direct(v, x0);
    for (int c = 0; c < 3; ++c) EXPECT_LT(std::abs(u.comp[c][u.flat(1, 1, 1)] - want[c]), 1e-12 * (1.0 + std::abs(want[c])));
}

TEST(Physical, DiscreteParsevalOnPeriodicMesh) {
    const GridSpec g = small_grid();
    const auto v = oracle::random_solenoidal<double>(g, 43);
    const XMesh xm = periodic_xmesh(g, {8, 8, 10});
    const auto e = energy_density(to_physical(v, xm));
    double sum = 0.0;
    for (double x : e) sum += x;
    const double ex = sum * xm.cell_volume();
    EXPECT_NEAR(ex, totals(v).energy, 1e-8 * totals(v).energy);
}

TEST(Physical, NyquistViolationIsRejected) {
    const GridSpec g = small_grid();
    const SpectralField<double> v(g);
    XMesh xm = periodic_xmesh(g, {8, 8, 10});
    xm.axes[2].step = 1.1 * kPi / g.k_abs_max(2);
    EXPECT_THROW(to_physical(v, xm), ConfigError);
}

TEST(Vorticity, ConstantFieldHasNoVorticity) {
    const GridSpec g = small_grid();
    SpectralField<double> v(g);
    v.set_vec(g.flat(g.origin_index()), {1.0, 2.0, 3.0});
    const auto w = vorticity_and_stretching(v, periodic_xmesh(g, {8, 8, 10}), 1.0);
    for (int c = 0; c < 3; ++c)
        for (const cd& z : w.omega.comp[c]) EXPECT_EQ(std::abs(z), 0.0);
}

TEST(Vorticity, SpectralGradientMatchesCentralDifferences) {
    const GridSpec g = small_grid();
    const auto v = oracle::random_solenoidal<double>(g, 47);
    const Vec3 x0{0.2, -0.4, 0.1};
    const auto w = vorticity_and_stretching(v, point_stencil(x0, 0.1), 1.0);
    const std::size_t centre = w.omega.flat(1, 1, 1);
    auto fd_error = [&](double dx) {
        double err = 0.0;
        for (int j = 0; j < 3; ++j) {
            Vec3 xp = x0, xm = x0;
            xp[j] += dx;
            xm[j] -= dx;
            const auto up = u_direct(v, xp), um = u_direct(v, xm);
            for (int l = 0; l < 3; ++l) err = std::max(err, std::abs((up[l] - um[l]) / (2.0 * dx) - w.grad[3 * j + l][centre]));
        }
        return err;
    };
    const double e1 = fd_error(1e-2), e2 = fd_error(5e-3);
    EXPECT_NEAR(e1 / e2, 4.0, 0.1);  // O(dx^2)
    // curl consistency
    const auto& d = w.grad;
    EXPECT_LT(std::abs(w.omega.comp[0][centre] - (d[3 * 1 + 2][centre] - d[3 * 2 + 1][centre])), 1e-14);
}

TEST(Vorticity, StretchingMarginalIsScaledByE0) {
    const GridSpec g = small_grid();
    const auto v = oracle::random_solenoidal<double>(g, 53);
    const XMesh xm = periodic_xmesh(g, {8, 8, 10});
    const auto a = vorticity_and_stretching(v, xm, 1.0);
    const auto b = vorticity_and_stretching(v, xm, 4.0);
    for (std::size_t i = 0; i < a.W3.density.size(); ++i) EXPECT_NEAR(b.W3.density[i], a.W3.density[i] / 4.0, 1e-12 * a.W3.density[i]);
}

TEST(Vorticity, PhysicalEnstrophyMatchesSpectralOnPeriodicMesh) {
    const GridSpec g = small_grid();
    const auto v = oracle::random_solenoidal<double>(g, 59);
    const auto w = vorticity_and_stretching(v, periodic_xmesh(g, {8, 8, 10}), 1.0);
    EXPECT_NEAR(w.S3.integral(), totals(v).enstrophy, 1e-8 * totals(v).enstrophy);
}

TEST(QuadraticForms, MatchUnconjugatedPhysicalIntegrals) {
    const GridSpec g = GridSpec::from_multiples({-3, -3, -3}, {3, 3, 3}, 1.0);
    const auto v = oracle::random_solenoidal<double>(g, 61);
    const XMesh xm = periodic_xmesh(g, {8, 8, 8});
    const PhysicalField u = to_physical(v, xm);
    const auto w = vorticity_and_stretching(v, xm, 1.0);
    cd eq{}, sq{};
    for (std::size_t n = 0; n < xm.size(); ++n) {
        for (int c = 0; c < 3; ++c) eq += 0.5 * u.comp[c][n] * u.comp[c][n];
        for (int q = 0; q < 9; ++q) sq += w.grad[q][n] * w.grad[q][n];
    }
    eq *= xm.cell_volume();
    sq *= xm.cell_volume();
    const auto f = quadratic_forms(v);
    EXPECT_NEAR(f.energy, eq.real(), 1e-9 * std::abs(eq));
    EXPECT_NEAR(f.enstrophy, sq.real(), 1e-9 * std::abs(sq));
    EXPECT_LT(std::abs(eq.imag()), 1e-9 * std::abs(eq));
}

TEST(QuadraticForms, VanishWithoutMirroredSupport) {
    const GridSpec g = GridSpec::from_multiples({-2, -2, -1}, {2, 2, 8}, 1.0);
    SpectralField<double> v(g);
    v.at(0, g.flat(g.index_of({0, 1, 5}))) = 1.0;
    const auto f = quadratic_forms(v);
    EXPECT_EQ(f.energy, 0.0);
    EXPECT_EQ(f.enstrophy, 0.0);
}

TEST(Records, SupportAndBoundaryFractions) {
    const GridSpec g = GridSpec::from_multiples({-2, -2, -1}, {2, 2, 18}, 1.0);
    SpectralField<double> v(g);
    v.at(0, g.flat(g.index_of({0, 1, 5}))) = 1.0;
    auto r = make_record(v, 7);
    EXPECT_EQ(r.step, 7u);
    EXPECT_DOUBLE_EQ(r.support_fraction, 1.0);
    EXPECT_DOUBLE_EQ(r.boundary_fraction, 0.0);
    EXPECT_DOUBLE_EQ(r.max_S3_location, 5.0);
    v.at(0, g.flat(g.index_of({0, 1, 18}))) = 1.0;  // top layer, outer 10% of k3
    r = make_record(v, 8);
    const double s_in = 26.0, s_out = 325.0;
    EXPECT_NEAR(r.support_fraction, s_in / (s_in + s_out), 1e-14);
    EXPECT_NEAR(r.boundary_fraction, s_out / (s_in + s_out), 1e-14);
}
