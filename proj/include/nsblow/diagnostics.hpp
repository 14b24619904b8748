#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "nsblow/core.hpp"
#include "nsblow/grid.hpp"

namespace nsblow {

// ---------------------------------------------------------------------------
// Spectral densities and totals
// ---------------------------------------------------------------------------

/// Node-wise e = |v|^2/2 and s = |k|^2 |v|^2.
struct Densities {
    GridSpec grid;
    double t = 0.0;
    std::vector<double> e;
    std::vector<double> s;
};

template <FieldScalar T>
Densities densities(const SpectralField<T>& v) {
    const GridSpec& g = v.grid();
    Densities d{g, v.t(), std::vector<double>(g.size()), std::vector<double>(g.size())};
    for (std::size_t n = 0; n < g.size(); ++n) {
        const double vv = abs2(v.at(0, n)) + abs2(v.at(1, n)) + abs2(v.at(2, n));
        d.e[n] = 0.5 * vv;
        d.s[n] = norm2(g.wavevector(n)) * vv;
    }
    return d;
}

struct Totals {
    double energy = 0.0;
    double enstrophy = 0.0;
};

/// E = (2pi)^3 h^3 sum e,  S = (2pi)^3 h^3 sum s  (Parseval-consistent constants).
inline Totals totals(const Densities& d) {
    CompensatedSum se, ss;
    for (std::size_t n = 0; n < d.e.size(); ++n) {
        se.add(d.e[n]);
        ss.add(d.s[n]);
    }
    const double c = kTwoPiCubed * d.grid.weight();
    return {c * se.value(), c * ss.value()};
}

template <FieldScalar T>
Totals totals(const SpectralField<T>& v) {
    return totals(densities(v));
}

/// Unconjugated forms E_q = (1/2) int u.u dx and S_q = int (grad u).(grad u) dx.
template <FieldScalar T>
struct QuadraticForms {
    T energy{};
    T enstrophy{};
};

/// Pairs each node k with -k; nodes whose mirror is off the mesh contribute nothing.
template <FieldScalar T>
QuadraticForms<T> quadratic_forms(const SpectralField<T>& v) {
    const GridSpec& g = v.grid();
    T se{}, ss{};
    for (std::size_t n = 0; n < g.size(); ++n) {
        const Index3 i = g.unflat(n);
        Index3 m{};
        for (int a = 0; a < 3; ++a) m[a] = -(g.lo(a) + i[a]) - g.lo(a);
        if (!g.contains(m)) continue;
        const std::size_t nm = g.flat(m);
        const T p = v.at(0, n) * v.at(0, nm) + v.at(1, n) * v.at(1, nm) + v.at(2, n) * v.at(2, nm);
        se += p;
        ss += norm2(g.wavevector(n)) * p;
    }
    const double c = kTwoPiCubed * g.weight();
    return {-0.5 * c * se, -c * ss};
}

// ---------------------------------------------------------------------------
// Marginals
// ---------------------------------------------------------------------------

enum class Space { spectral, physical };

inline const char* to_string(Space s) { return s == Space::spectral ? "spectral" : "physical"; }

/// One-axis marginal density: the other two axes integrated out.
struct MarginalProfile {
    int axis = 3;  // 1, 2 or 3
    Space space = Space::spectral;
    double t = 0.0;
    double step = 1.0;  // abscissa spacing
    std::vector<double> abscissa;
    std::vector<double> density;

    /// Integral with the same rectangle rule as the mesh quadrature.
    double integral() const {
        CompensatedSum s;
        for (double d : density) s.add(d);
        return s.value() * step;
    }
};

/// Sums a node-wise density over the two complementary axes times h^2.
inline MarginalProfile marginal(const GridSpec& g, const std::vector<double>& field, int axis, double t = 0.0) {
    if (axis < 1 || axis > 3) throw std::invalid_argument("marginal axis must be 1, 2 or 3");
    if (field.size() != g.size()) throw std::invalid_argument("marginal: field size mismatch");
    const int ax = axis - 1;
    MarginalProfile m;
    m.axis = axis;
    m.space = Space::spectral;
    m.t = t;
    m.step = g.h();
    m.abscissa.resize(g.n(ax));
    for (std::size_t i = 0; i < g.n(ax); ++i) m.abscissa[i] = g.k_axis(ax, i);
    std::vector<CompensatedSum> acc(g.n(ax));
    for (std::size_t n = 0; n < g.size(); ++n) acc[static_cast<std::size_t>(g.unflat(n)[ax])].add(field[n]);
    m.density.resize(g.n(ax));
    const double w2 = g.h() * g.h();
    for (std::size_t i = 0; i < acc.size(); ++i) m.density[i] = w2 * acc[i].value();
    return m;
}

// ---------------------------------------------------------------------------
// Per-tick time-series record
// ---------------------------------------------------------------------------

struct TimeSeriesRecord {
    std::uint64_t step = 0;
    double t = 0.0;
    double E = 0.0;
    double S = 0.0;
    double E_q = 0.0;
    double S_q = 0.0;
    double max_S3_location = 0.0;
    double support_fraction = 1.0;   // share of S with k3 in the lower 90% of the k3 range
    double boundary_fraction = 0.0;  // share of S on the outermost node layer of the mesh
    int corrector_iterations = 0;
    double corrector_residual = 0.0;
};

/// Enstrophy share on the outermost layer of nodes (any axis at its bound).
inline double boundary_enstrophy_fraction(const Densities& d) {
    const GridSpec& g = d.grid;
    CompensatedSum all, edge;
    for (std::size_t n = 0; n < g.size(); ++n) {
        all.add(d.s[n]);
        const Index3 i = g.unflat(n);
        bool on_edge = false;
        for (int a = 0; a < 3; ++a)
            if (i[a] == 0 || static_cast<std::size_t>(i[a]) + 1 == g.n(a)) on_edge = true;
        if (on_edge) edge.add(d.s[n]);
    }
    return all.value() > 0.0 ? edge.value() / all.value() : 0.0;
}

inline TimeSeriesRecord make_record(const SpectralField<double>& v, std::uint64_t step) {
    const Densities d = densities(v);
    const Totals tot = totals(d);
    const auto q = quadratic_forms(v);
    const MarginalProfile s3 = marginal(d.grid, d.s, 3, v.t());

    TimeSeriesRecord r;
    r.step = step;
    r.t = v.t();
    r.E = tot.energy;
    r.S = tot.enstrophy;
    r.E_q = q.energy;
    r.S_q = q.enstrophy;
    const auto it = std::max_element(s3.density.begin(), s3.density.end());
    r.max_S3_location = s3.abscissa[static_cast<std::size_t>(it - s3.density.begin())];

    const GridSpec& g = d.grid;
    const double cut = g.k_min(2) + 0.9 * (g.k_max(2) - g.k_min(2));
    CompensatedSum inner, all;
    for (std::size_t i = 0; i < s3.density.size(); ++i) {
        all.add(s3.density[i]);
        if (s3.abscissa[i] <= cut) inner.add(s3.density[i]);
    }
    r.support_fraction = all.value() > 0.0 ? inner.value() / all.value() : 1.0;
    r.boundary_fraction = boundary_enstrophy_fraction(d);
    return r;
}

// ---------------------------------------------------------------------------
// Physical space
// ---------------------------------------------------------------------------

/// Uniform x-mesh axis: x_j = start + j * step, j < count.
struct XAxis {
    double start = 0.0;
    double step = 0.1;
    std::size_t count = 1;

    double at(std::size_t j) const { return start + static_cast<double>(j) * step; }

    static XAxis centered(double step, std::size_t half) {
        return {-static_cast<double>(half) * step, step, 2 * half + 1};
    }
};

struct XMesh {
    std::array<XAxis, 3> axes{};
    std::size_t size() const { return axes[0].count * axes[1].count * axes[2].count; }
    double cell_volume() const { return axes[0].step * axes[1].step * axes[2].step; }
};

/// One period [-pi/h, pi/h) with M points per axis; on this mesh the discrete Parseval identity is exact.
inline XMesh periodic_xmesh(const GridSpec& g, std::array<std::size_t, 3> points) {
    XMesh m;
    const double period = 2.0 * kPi / g.h();
    for (int a = 0; a < 3; ++a) {
        const double dx = period / static_cast<double>(points[a]);
        m.axes[a] = {-0.5 * period, dx, points[a]};
    }
    return m;
}

/**
 * Default mesh for blow-up snapshots: transverse axes span one period at the
 * smallest 7-smooth point count above the mesh extent; the longitudinal axis
 * uses the Nyquist spacing pi/k3max over |x3| <= 1.5 pi / a.
 */
inline XMesh default_xmesh(const GridSpec& g, double a) {
    XMesh m;
    const double period = 2.0 * kPi / g.h();
    for (int ax = 0; ax < 2; ++ax) {
        std::size_t pts = 2 * static_cast<std::size_t>(std::max(-g.lo(ax), g.hi(ax))) + 2;
        const double dx = period / static_cast<double>(pts);
        m.axes[ax] = {-0.5 * period, dx, pts};
    }
    const double dx3 = kPi / std::max(g.k_abs_max(2), g.h());
    const auto half = static_cast<std::size_t>(std::ceil(1.5 * kPi / a / dx3));
    m.axes[2] = XAxis::centered(dx3, half);
    return m;
}

inline void check_nyquist(const GridSpec& g, const XMesh& xm) {
    for (int a = 0; a < 3; ++a) {
        const double kmax = g.k_abs_max(a);
        if (kmax > 0.0 && xm.axes[a].count > 1 && xm.axes[a].step > kPi / kmax * (1.0 + 1e-12))
            throw ConfigError("x-mesh axis " + std::to_string(a + 1) + " violates Nyquist: step " +
                              std::to_string(xm.axes[a].step) + " > pi/kmax = " + std::to_string(kPi / kmax));
    }
}

/// Complex 3-vector field on an x-mesh, planar by component, x3 contiguous.
struct PhysicalField {
    XMesh mesh;
    double t = 0.0;
    std::array<std::vector<std::complex<double>>, 3> comp;

    std::size_t flat(std::size_t j0, std::size_t j1, std::size_t j2) const {
        return (j0 * mesh.axes[1].count + j1) * mesh.axes[2].count + j2;
    }
};

namespace detail {

/**
 * Evaluates f(x) = sum_k c(k) exp(-i <k,x>) for a scalar spectral array by
 * three successive axis contractions (phase tables per axis).
 */
class SeparableTransform {
public:
    SeparableTransform(const GridSpec& g, const XMesh& xm) : g_(g), xm_(xm) {
        for (int a = 0; a < 3; ++a) {
            const std::size_t n = g.n(a), m = xm.axes[a].count;
            phase_[a].resize(n * m);
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t i = 0; i < n; ++i) {
                    const double ph = -g.k_axis(a, i) * xm.axes[a].at(j);
                    phase_[a][j * n + i] = {std::cos(ph), std::sin(ph)};
                }
        }
    }

    template <class Coef>
    std::vector<std::complex<double>> apply(Coef&& coef) const {
        const std::size_t n0 = g_.n(0), n1 = g_.n(1), n2 = g_.n(2);
        const std::size_t m0 = xm_.axes[0].count, m1 = xm_.axes[1].count, m2 = xm_.axes[2].count;
        using cd = std::complex<double>;
        // axis 3: (n0, n1, n2) -> (n0, n1, m2)
        std::vector<cd> s3(n0 * n1 * m2);
        std::vector<cd> line(n2);
        for (std::size_t i0 = 0; i0 < n0; ++i0)
            for (std::size_t i1 = 0; i1 < n1; ++i1) {
                const std::size_t base = (i0 * n1 + i1) * n2;
                bool any = false;
                for (std::size_t i2 = 0; i2 < n2; ++i2) {
                    line[i2] = coef(base + i2);
                    any = any || line[i2] != cd{};
                }
                cd* out = s3.data() + (i0 * n1 + i1) * m2;
                if (!any) continue;
                for (std::size_t j2 = 0; j2 < m2; ++j2) {
                    const cd* ph = phase_[2].data() + j2 * n2;
                    double re = 0.0, im = 0.0;
                    for (std::size_t i2 = 0; i2 < n2; ++i2) {
                        re += line[i2].real() * ph[i2].real() - line[i2].imag() * ph[i2].imag();
                        im += line[i2].real() * ph[i2].imag() + line[i2].imag() * ph[i2].real();
                    }
                    out[j2] = {re, im};
                }
            }
        // axis 2: (n0, n1, m2) -> (n0, m1, m2)
        std::vector<cd> s2(n0 * m1 * m2);
        for (std::size_t i0 = 0; i0 < n0; ++i0)
            for (std::size_t i1 = 0; i1 < n1; ++i1) {
                const cd* src = s3.data() + (i0 * n1 + i1) * m2;
                for (std::size_t j1 = 0; j1 < m1; ++j1) {
                    const cd ph = phase_[1][j1 * n1 + i1];
                    cd* dst = s2.data() + (i0 * m1 + j1) * m2;
                    for (std::size_t j2 = 0; j2 < m2; ++j2) dst[j2] += ph * src[j2];
                }
            }
        // axis 1: (n0, m1, m2) -> (m0, m1, m2)
        std::vector<cd> out(m0 * m1 * m2);
        for (std::size_t i0 = 0; i0 < n0; ++i0) {
            const cd* src = s2.data() + i0 * m1 * m2;
            for (std::size_t j0 = 0; j0 < m0; ++j0) {
                const cd ph = phase_[0][j0 * n0 + i0];
                cd* dst = out.data() + j0 * m1 * m2;
                for (std::size_t r = 0; r < m1 * m2; ++r) dst[r] += ph * src[r];
            }
        }
        return out;
    }

private:
    GridSpec g_;
    XMesh xm_;
    std::array<std::vector<std::complex<double>>, 3> phase_;
};

}  // namespace detail

/// u(x) = -i h^3 sum_k v(k) exp(-i <k,x>): the inverse modified transform on the mesh quadrature.
template <FieldScalar T>
PhysicalField to_physical(const SpectralField<T>& v, const XMesh& xm) {
    check_nyquist(v.grid(), xm);
    const detail::SeparableTransform tr(v.grid(), xm);
    PhysicalField u{xm, v.t(), {}};
    const std::complex<double> pre{0.0, -v.grid().weight()};
    for (int c = 0; c < 3; ++c) {
        auto comp = v.component(c);
        u.comp[c] = tr.apply([&](std::size_t n) { return pre * std::complex<double>(comp[n]); });
    }
    return u;
}

/// Marginal of a node-wise x-space density along one axis (the other two integrated out).
inline MarginalProfile physical_marginal(const XMesh& xm, const std::vector<double>& field, int axis, double t = 0.0) {
    if (axis < 1 || axis > 3) throw std::invalid_argument("marginal axis must be 1, 2 or 3");
    const int ax = axis - 1;
    MarginalProfile m;
    m.axis = axis;
    m.space = Space::physical;
    m.t = t;
    m.step = xm.axes[ax].step;
    const std::size_t c0 = xm.axes[0].count, c1 = xm.axes[1].count, c2 = xm.axes[2].count;
    m.abscissa.resize(xm.axes[ax].count);
    for (std::size_t j = 0; j < m.abscissa.size(); ++j) m.abscissa[j] = xm.axes[ax].at(j);
    std::vector<CompensatedSum> acc(xm.axes[ax].count);
    for (std::size_t j0 = 0; j0 < c0; ++j0)
        for (std::size_t j1 = 0; j1 < c1; ++j1)
            for (std::size_t j2 = 0; j2 < c2; ++j2) {
                const std::size_t j[3] = {j0, j1, j2};
                acc[j[ax]].add(field[(j0 * c1 + j1) * c2 + j2]);
            }
    double w = 1.0;
    for (int a = 0; a < 3; ++a)
        if (a != ax) w *= xm.axes[a].step;
    m.density.resize(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) m.density[i] = w * acc[i].value();
    return m;
}

/// x-space energy density |u|^2 / 2.
inline std::vector<double> energy_density(const PhysicalField& u) {
    std::vector<double> e(u.mesh.size());
    for (std::size_t n = 0; n < e.size(); ++n) e[n] = 0.5 * (std::norm(u.comp[0][n]) + std::norm(u.comp[1][n]) + std::norm(u.comp[2][n]));
    return e;
}

/// Velocity gradient, vorticity and vorticity stretching on an x-mesh.
struct VorticityFields {
    PhysicalField omega;
    PhysicalField stretching;                              // w = omega . grad u
    std::array<std::vector<std::complex<double>>, 9> grad;  // grad[3*j + l] = d_j u_l
    std::vector<double> enstrophy_density;                 // |grad u|^2
    MarginalProfile W3;                                    // int |w|^2 dx1 dx2, divided by E0
    MarginalProfile S3;                                    // int |grad u|^2 dx1 dx2
};

/**
 * Spectral derivatives: d_j u_l = -i h^3 sum (-i k_j) v_l e^{-i<k,x>}.
 * omega = curl u, w_l = sum_j omega_j d_j u_l, W3 reported divided by E0.
 */
template <FieldScalar T>
VorticityFields vorticity_and_stretching(const SpectralField<T>& v, const XMesh& xm, double E0) {
    check_nyquist(v.grid(), xm);
    if (!(E0 > 0.0)) throw std::invalid_argument("E0 must be positive");
    const GridSpec& g = v.grid();
    const detail::SeparableTransform tr(g, xm);
    using cd = std::complex<double>;
    const cd pre{0.0, -g.weight()};
    const cd minus_i{0.0, -1.0};

    VorticityFields out;
    for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) {
            auto comp = v.component(l);
            out.grad[3 * j + l] = tr.apply([&](std::size_t n) {
                const double kj = g.k_axis(j, static_cast<std::size_t>(g.unflat(n)[j]));
                return pre * minus_i * kj * cd(comp[n]);
            });
        }
    const std::size_t N = xm.size();
    auto d = [&](int j, int l, std::size_t n) { return out.grad[3 * j + l][n]; };
    out.omega = PhysicalField{xm, v.t(), {}};
    out.stretching = PhysicalField{xm, v.t(), {}};
    for (int c = 0; c < 3; ++c) {
        out.omega.comp[c].resize(N);
        out.stretching.comp[c].resize(N);
    }
    out.enstrophy_density.resize(N);
    std::vector<double> w2(N);
    for (std::size_t n = 0; n < N; ++n) {
        const cd om[3] = {d(1, 2, n) - d(2, 1, n), d(2, 0, n) - d(0, 2, n), d(0, 1, n) - d(1, 0, n)};
        double s = 0.0;
        for (int q = 0; q < 9; ++q) s += std::norm(out.grad[q][n]);
        out.enstrophy_density[n] = s;
        double ww = 0.0;
        for (int l = 0; l < 3; ++l) {
            out.omega.comp[l][n] = om[l];
            const cd wl = om[0] * d(0, l, n) + om[1] * d(1, l, n) + om[2] * d(2, l, n);
            out.stretching.comp[l][n] = wl;
            ww += std::norm(wl);
        }
        w2[n] = ww / E0;
    }
    out.W3 = physical_marginal(xm, w2, 3, v.t());
    out.S3 = physical_marginal(xm, out.enstrophy_density, 3, v.t());
    return out;
}

}  // namespace nsblow
