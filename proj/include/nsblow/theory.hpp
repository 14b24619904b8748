#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsblow/core.hpp"
#include "nsblow/grid.hpp"
#include "nsblow/initcond.hpp"
#include "nsblow/quadrature.hpp"
#include "nsblow/solver.hpp"

namespace nsblow {

// ---------------------------------------------------------------------------
// Asymptotic tail series
// ---------------------------------------------------------------------------

/**
 * Parameters of the tail series
 *   v(k,t) = const * sum_{p=p0}^{p_max} sigma(p) e^{-kappa p (tau-t)} k_perp R_p(k),
 *   R_p(k) = sqrt(p) g3(Y^p) / (|k|^2 + kappa p),  Y^p = (k - p a e3) / sqrt(p),
 * with sigma = 1 for type I and (-1)^p for type II.
 */
struct TailSeriesParams {
    double a = 20.0;
    double kappa = 1.0;
    double tau = 1.0;
    long p0 = 10;
    long p_max = 2000;
    SolutionType sol_type = SolutionType::I;
    double constant = 1.0;

    void validate() const {
        if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("tail: a must be positive");
        if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("tail: kappa must be positive");
        if (!std::isfinite(tau)) throw ConfigError("tail: tau must be finite");
        if (p0 < 1) throw ConfigError("tail: p0 must be >= 1");
        if (p_max < p0) throw ConfigError("tail: p_max must be >= p0");
        if (!std::isfinite(constant)) throw ConfigError("tail: const must be finite");
    }

    double sigma(long p) const { return sol_type == SolutionType::I || p % 2 == 0 ? 1.0 : -1.0; }
};

namespace detail {

inline constexpr double kInvTwoPiThreeHalves = 0.063493635934240969;  // (2 pi)^{-3/2}

/// R_p at cylindrical coordinates (rho^2, k3).
inline double tail_radial(double rho2, double k3, double p, double a, double kappa) {
    const double d = k3 - p * a;
    const double y2 = (rho2 + d * d) / p;
    return std::sqrt(p) * kInvTwoPiThreeHalves * std::exp(-0.5 * y2) / (rho2 + k3 * k3 + kappa * p);
}

}  // namespace detail

struct TailValue {
    Vec3 value{};
    double truncation_bound = 0.0;  // bounds |exact infinite series - value| componentwise
};

/**
 * Truncated tail series at one wavevector with a certified bound on the
 * omitted terms p > p_max. Terms past P* = max(p_max+1, ceil(2|k3|/a)) are
 * dominated by a geometric series in e^{-a^2/8}; those in between are summed.
 */
inline TailValue tail_eval(const Vec3& k, double t, const TailSeriesParams& params) {
    params.validate();
    if (!(t < params.tau)) throw NumericError("tail_eval: t must precede tau");
    const double eps = params.tau - t;
    const double rho2 = k[0] * k[0] + k[1] * k[1];
    double sum = 0.0;
    for (long p = params.p0; p <= params.p_max; ++p) {
        const double pd = static_cast<double>(p);
        sum += params.sigma(p) * std::exp(-params.kappa * pd * eps) * detail::tail_radial(rho2, k[2], pd, params.a, params.kappa);
    }
    TailValue out;
    out.value = {params.constant * k[0] * sum, params.constant * k[1] * sum, 0.0};

    const double scale = std::abs(params.constant) * std::sqrt(rho2);
    const long p_star = std::max(params.p_max + 1, static_cast<long>(std::ceil(2.0 * std::abs(k[2]) / params.a)));
    double bound = 0.0;
    for (long p = params.p_max + 1; p < p_star; ++p) {
        const double pd = static_cast<double>(p);
        bound += std::exp(-params.kappa * pd * eps) * detail::tail_radial(rho2, k[2], pd, params.a, params.kappa);
    }
    const double ps = static_cast<double>(p_star);
    const double q = std::exp(-params.a * params.a / 8.0);
    bound += detail::kInvTwoPiThreeHalves / (params.kappa * std::sqrt(ps)) * std::exp(-ps * params.a * params.a / 8.0) / (1.0 - q);
    out.truncation_bound = scale * bound;
    return out;
}

/// Integration controls for tail_energy_enstrophy.
struct TailMesh {
    double n_sigma = 8.0;          // box half-width in lobe standard deviations
    double k3_panel_sigmas = 1.0;  // k3 panel length in local lobe widths
    std::size_t rho_panels = 4;
    std::size_t nodes_per_panel = 8;
    double k3_cap = std::numeric_limits<double>::infinity();   // optional hard limit on the k3 range
    double rho_cap = std::numeric_limits<double>::infinity();  // optional hard limit on |k_perp|
    double escape_threshold = 1e-6;                            // boundary-cell energy share that signals escape
};

struct TailTotals {
    double t = 0.0;
    double energy = 0.0;     // integral of |v|^2
    double enstrophy = 0.0;  // integral of |k|^2 |v|^2
    double boundary_fraction = 0.0;
};

/**
 * Energy and enstrophy integrals of the truncated tail series on cylindrical
 * (rho, k3) Gauss-Legendre panels. Throws when the outermost panels carry
 * more than escape_threshold of the energy at any requested time.
 */
inline std::vector<TailTotals> tail_energy_enstrophy(std::span<const double> times, const TailSeriesParams& params,
                                                     const TailMesh& mesh = {}) {
    params.validate();
    for (double t : times)
        if (!(t < params.tau)) throw NumericError("tail_energy_enstrophy: t must precede tau");
    const double a = params.a, kappa = params.kappa, ns = mesh.n_sigma;
    const double p0 = static_cast<double>(params.p0), pmax = static_cast<double>(params.p_max);

    const double k3_lo = p0 * a - ns * std::sqrt(p0);
    const double k3_hi = std::min(pmax * a + ns * std::sqrt(pmax), mesh.k3_cap);
    std::vector<double> breaks{k3_lo};
    while (breaks.back() < k3_hi) {
        const double width = mesh.k3_panel_sigmas * std::sqrt(std::max(p0, breaks.back() / a));
        breaks.push_back(std::min(breaks.back() + width, k3_hi));
    }
    const QuadratureRule unit = gauss_legendre(mesh.nodes_per_panel);
    const std::size_t nt = times.size();
    std::vector<double> eps(nt);
    for (std::size_t i = 0; i < nt; ++i) eps[i] = params.tau - times[i];

    std::vector<CompensatedSum> e(nt), s(nt), edge(nt);
    std::vector<double> amp(nt);
    const std::size_t npanels = breaks.size() - 1;
    for (std::size_t pan = 0; pan < npanels; ++pan) {
        const double z0 = breaks[pan], z1 = breaks[pan + 1];
        const double zh = 0.5 * (z1 - z0), zm = 0.5 * (z1 + z0);
        for (std::size_t iz = 0; iz < unit.nodes.size(); ++iz) {
            const double k3 = zm + zh * unit.nodes[iz];
            const double wz = zh * unit.weights[iz];
            const double pc = k3 / a;
            const double half = ns * std::sqrt(std::max(pc, 1.0)) / a + 2.0;
            const long plo = std::max(params.p0, static_cast<long>(std::floor(pc - half)));
            const long phi = std::min(params.p_max, static_cast<long>(std::ceil(pc + half)));
            if (plo > phi) continue;
            const double rho_hi = std::min(ns * std::sqrt(static_cast<double>(phi)), mesh.rho_cap);
            const double rw = rho_hi / static_cast<double>(mesh.rho_panels);
            for (std::size_t rp = 0; rp < mesh.rho_panels; ++rp) {
                const bool outer = rp + 1 == mesh.rho_panels || pan == 0 || pan + 1 == npanels;
                for (std::size_t ir = 0; ir < unit.nodes.size(); ++ir) {
                    const double rho = rw * (static_cast<double>(rp) + 0.5 + 0.5 * unit.nodes[ir]);
                    const double wr = 0.5 * rw * unit.weights[ir];
                    const double rho2 = rho * rho;
                    std::fill(amp.begin(), amp.end(), 0.0);
                    for (long p = plo; p <= phi; ++p) {
                        const double pd = static_cast<double>(p);
                        const double r = params.sigma(p) * detail::tail_radial(rho2, k3, pd, a, kappa);
                        for (std::size_t i = 0; i < nt; ++i) amp[i] += std::exp(-kappa * pd * eps[i]) * r;
                    }
                    const double vol = 2.0 * kPi * rho * wr * wz;
                    const double c2 = params.constant * params.constant;
                    for (std::size_t i = 0; i < nt; ++i) {
                        const double dens = c2 * rho2 * amp[i] * amp[i] * vol;
                        e[i].add(dens);
                        s[i].add(dens * (rho2 + k3 * k3));
                        if (outer) edge[i].add(dens);
                    }
                }
            }
        }
    }
    std::vector<TailTotals> out(nt);
    for (std::size_t i = 0; i < nt; ++i) {
        out[i] = {times[i], e[i].value(), s[i].value(), e[i].value() > 0.0 ? edge[i].value() / e[i].value() : 0.0};
        if (out[i].boundary_fraction > mesh.escape_threshold)
            throw NumericError("tail_energy_enstrophy: support escapes the integration mesh (boundary share " +
                               std::to_string(out[i].boundary_fraction) + ")");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Overlap integrals I_{p,j} = int |k_perp|^2 R_p R_{p+j} dk
// ---------------------------------------------------------------------------

struct OverlapQuadrature {
    double n_sigma = 8.0;
    std::size_t start_nodes = 16;  // per dimension
    std::size_t max_nodes = 2048;
    double rtol = 1e-10;
};

/**
 * Tensor Gauss-Legendre in (rho, k3) on a box of n_sigma standard deviations
 * around the product Gaussian's center 2apq/(p+q); nodes double until two
 * successive values agree to rtol. The factor e^{-j^2 a^2 / (2(2p+j))} is
 * applied analytically.
 */
inline double overlap_integral(long p, long j, const TailSeriesParams& params, const OverlapQuadrature& quad = {}) {
    if (p < 1 || j < 0) throw std::invalid_argument("overlap_integral: need p >= 1 and j >= 0");
    const double pd = static_cast<double>(p), qd = static_cast<double>(p + j), a = params.a, kappa = params.kappa;
    const double sig = std::sqrt(pd * qd / (pd + qd));
    const double center = 2.0 * a * pd * qd / (pd + qd);
    const double off_p = center - pd * a;  // = a p j / (2p + j)
    const double off_q = center - qd * a;
    const double pref = std::sqrt(pd * qd) * detail::kInvTwoPiThreeHalves * detail::kInvTwoPiThreeHalves * 2.0 * kPi;
    const double half = quad.n_sigma * sig;
    // minimum of the Gaussian exponent, factored out so convergence is judged on O(1) values
    const double base = 0.5 * off_p * off_p / pd + 0.5 * off_q * off_q / qd;

    auto evaluate = [&](std::size_t n) {
        const QuadratureRule z = gauss_legendre(n, -half, half);
        const QuadratureRule r = gauss_legendre(n, 0.0, half);
        CompensatedSum acc;
        for (std::size_t iz = 0; iz < n; ++iz) {
            const double x = z.nodes[iz];
            const double k3 = center + x;
            const double dp = off_p + x, dq = off_q + x;
            for (std::size_t ir = 0; ir < n; ++ir) {
                const double rho = r.nodes[ir], rho2 = rho * rho;
                const double expo = base - 0.5 * (rho2 + dp * dp) / pd - 0.5 * (rho2 + dq * dq) / qd;
                const double k2 = rho2 + k3 * k3;
                acc.add(z.weights[iz] * r.weights[ir] * rho2 * rho * std::exp(expo) / ((k2 + kappa * pd) * (k2 + kappa * qd)));
            }
        }
        return pref * acc.value();
    };
    const double scale = std::exp(-base);

    double prev = evaluate(quad.start_nodes);
    for (std::size_t n = 2 * quad.start_nodes; n <= quad.max_nodes; n *= 2) {
        const double cur = evaluate(n);
        if (std::abs(cur - prev) <= quad.rtol * std::abs(cur)) return scale * cur;
        prev = cur;
    }
    throw NumericError("overlap_integral: quadrature did not converge for p=" + std::to_string(p) + ", j=" + std::to_string(j));
}

/// Large-p limit p^{-1/2} e^{-s^2 a^2 / 4} / ((4 pi)^{3/2} a^4), s = j / sqrt(p).
inline double overlap_asymptotic(long p, long j, double a) {
    const double pd = static_cast<double>(p);
    const double s = static_cast<double>(j) / std::sqrt(pd);
    return std::exp(-s * s * a * a / 4.0) / (std::sqrt(pd) * std::pow(4.0 * kPi, 1.5) * std::pow(a, 4));
}

/// Energy of the truncated tail series as the Gram sum const^2 sum_{p,q} sigma sigma e^{-kappa(p+q)eps} I_{min,|p-q|}.
inline double tail_energy_gram(double t, const TailSeriesParams& params, long j_max, const OverlapQuadrature& quad = {}) {
    params.validate();
    if (!(t < params.tau)) throw NumericError("tail_energy_gram: t must precede tau");
    const double eps = params.tau - t;
    CompensatedSum acc;
    for (long p = params.p0; p <= params.p_max; ++p) {
        for (long j = 0; j <= j_max && p + j <= params.p_max; ++j) {
            const double w = params.sigma(p) * params.sigma(p + j) * std::exp(-params.kappa * static_cast<double>(2 * p + j) * eps);
            acc.add((j == 0 ? 1.0 : 2.0) * w * overlap_integral(p, j, params, quad));
        }
    }
    return params.constant * params.constant * acc.value();
}

// ---------------------------------------------------------------------------
// Radial fixed point H = c Y_perp
// ---------------------------------------------------------------------------

struct FixedPointParams {
    double c = 1.0;
    std::size_t resolution = 32;     // Gauss-Legendre nodes in gamma, Gauss-Hermite nodes per axis in Y'
    std::size_t test_points = 8;     // Gauss-Hermite test abscissae per axis for Y

    void validate() const {
        if (resolution < 2) throw ConfigError("fixedpoint: resolution must be >= 2");
        if (test_points < 1) throw ConfigError("fixedpoint: test_points must be >= 1");
        if (!std::isfinite(c)) throw ConfigError("fixedpoint: c must be finite");
    }
};

using Vec2 = std::array<double, 2>;

/**
 * Right-hand side of the fixed-point equation at H = Y_perp (c = 1).
 *
 * The Gaussian pair g_gamma(Y-Y') g_{1-gamma}(Y') equals g_1(Y) times the
 * normal density of Y' with mean (1-gamma)Y and variance gamma(1-gamma), so
 * Y' = (1-gamma)Y + sqrt(gamma(1-gamma)) xi with xi standard normal. The
 * substitution gamma = sin^2(theta) makes the gamma integrand smooth.
 */
inline Vec2 fixed_point_rhs_unit(const Vec2& y, std::size_t resolution) {
    const QuadratureRule th = gauss_legendre(resolution, 0.0, 0.5 * kPi);
    const QuadratureRule gh = gauss_hermite_normal(resolution);
    Vec2 acc{0.0, 0.0};
    for (std::size_t it = 0; it < th.nodes.size(); ++it) {
        const double sn = std::sin(th.nodes[it]), cs = std::cos(th.nodes[it]);
        const double g = sn * sn, sg = sn, s1g = cs;  // gamma, sqrt(gamma), sqrt(1-gamma)
        const double jac = 2.0 * sn * cs * th.weights[it];
        for (std::size_t i1 = 0; i1 < gh.nodes.size(); ++i1)
            for (std::size_t i2 = 0; i2 < gh.nodes.size(); ++i2) {
                const Vec2 xi{gh.nodes[i1], gh.nodes[i2]};
                const double w = jac * gh.weights[i1] * gh.weights[i2];
                // (Y - Y') / sqrt(gamma) = sqrt(gamma) Y - sqrt(1-gamma) xi
                const Vec2 u{sg * y[0] - s1g * xi[0], sg * y[1] - s1g * xi[1]};
                // Y' / sqrt(1-gamma) = sqrt(1-gamma) Y + sqrt(gamma) xi
                const Vec2 z{s1g * y[0] + sg * xi[0], s1g * y[1] + sg * xi[1]};
                const double uu = u[0] * u[0] + u[1] * u[1];
                const double zz = z[0] * z[0] + z[1] * z[1];
                const double ell = -s1g * s1g * s1g * uu + sg * (1.0 - g) * zz;
                acc[0] += w * ell * z[0];
                acc[1] += w * ell * z[1];
            }
    }
    const double g1 = std::exp(-0.5 * (y[0] * y[0] + y[1] * y[1])) / (2.0 * kPi);
    return {g1 * acc[0], g1 * acc[1]};
}

struct FixedPointResult {
    double c_star = 0.0;
    double residual = 0.0;       // relative residual at c_star
    double residual_at_c = 0.0;  // relative residual at params.c
    std::size_t n_test_points = 0;
};

/**
 * Least-squares c* with c L(Y) = c^2 R(Y) over a Gauss-Hermite test set, where
 * L = g_1 Y and R is the unit right-hand side. Relative residuals are
 * ||c L - c^2 R|| / max(||c L||, ||c^2 R||), zero when both sides vanish.
 */
inline FixedPointResult fixed_point_residual(const FixedPointParams& params) {
    params.validate();
    const QuadratureRule pts = gauss_hermite_normal(params.test_points);
    std::vector<Vec2> lhs, rhs;
    for (double y1 : pts.nodes)
        for (double y2 : pts.nodes) {
            const Vec2 y{y1, y2};
            const double g1 = std::exp(-0.5 * (y1 * y1 + y2 * y2)) / (2.0 * kPi);
            lhs.push_back({g1 * y1, g1 * y2});
            rhs.push_back(fixed_point_rhs_unit(y, params.resolution));
        }
    double lr = 0.0, rr = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        lr += lhs[i][0] * rhs[i][0] + lhs[i][1] * rhs[i][1];
        rr += rhs[i][0] * rhs[i][0] + rhs[i][1] * rhs[i][1];
    }
    if (!(rr > 0.0)) throw NumericError("fixed_point_residual: degenerate least squares (right side vanishes on the test set)");

    auto rel = [&](double c) {
        double num = 0.0, nl = 0.0, nr = 0.0;
        for (std::size_t i = 0; i < lhs.size(); ++i)
            for (int d = 0; d < 2; ++d) {
                const double l = c * lhs[i][d], r = c * c * rhs[i][d];
                num += (l - r) * (l - r);
                nl += l * l;
                nr += r * r;
            }
        const double den = std::max(nl, nr);
        return den > 0.0 ? std::sqrt(num / den) : 0.0;
    };
    FixedPointResult out;
    out.c_star = lr / rr;
    out.residual = rel(out.c_star);
    out.residual_at_c = rel(params.c);
    out.n_test_points = lhs.size();
    return out;
}

// ---------------------------------------------------------------------------
// Power-series oracle
// ---------------------------------------------------------------------------

struct SeriesOracleSpec {
    int p_top = 3;
    std::size_t s_nodes = 24;                 // Gauss-Legendre nodes for the outer s integral
    std::size_t max_nodes = 32 * 32 * 32;     // cost guard on grid size

    void validate() const {
        if (p_top < 2 || p_top > 3) throw ConfigError("series oracle: p_top must be 2 or 3");
        if (s_nodes < 1) throw ConfigError("series oracle: s_nodes must be >= 1");
    }
};

/**
 * Truncated power-series expansion v = v1 + v2 + v3 + ... of the integral
 * equation by direct sums over mesh nodes:
 *   v1(t) = e^{-t|k|^2} v0,
 *   g2(s) = B(v1(s), v1(s)),            v2(t) = int_0^t e^{-(t-s)|k|^2} g2(s) ds  (closed form in s),
 *   g3(s) = B(v1, v2)(s) + B(v2, v1)(s), v3(t) = int_0^t e^{-(t-s)|k|^2} g3(s) ds  (Gauss-Legendre in s),
 * with B(x, y)(k) = h^3 P_k sum_{k'} <x(k-k'), k> y(k') restricted to the mesh.
 */
class SeriesOracle {
public:
    SeriesOracle(const SpectralField<double>& v0, const SeriesOracleSpec& spec) : grid_(v0.grid()), spec_(spec), v0_(v0) {
        spec.validate();
        if (grid_.size() > spec.max_nodes)
            throw ConfigError("series oracle: grid of " + std::to_string(grid_.size()) + " nodes exceeds the cost guard");
        k2_.resize(grid_.size());
        for (std::size_t n = 0; n < grid_.size(); ++n) k2_[n] = norm2(grid_.wavevector(n));
        support_ = support_of(v0_);
        // every product pair of v0 nodes landing on the mesh
        for (std::size_t q : support_)
            for (std::size_t kp : support_) {
                const auto target = sum_node(q, kp);
                if (!target) continue;
                const Vec3 k = grid_.wavevector(*target);
                const auto x = v0_.vec(q), y = v0_.vec(kp);
                const double s = x[0] * k[0] + x[1] * k[1] + x[2] * k[2];
                pairs_.push_back({*target, {s * y[0], s * y[1], s * y[2]}, k2_[q] + k2_[kp]});
            }
    }

    const GridSpec& grid() const { return grid_; }

    SpectralField<double> v1(double t) const {
        SpectralField<double> out(grid_, t);
        for (std::size_t n : support_) {
            const double e = std::exp(-t * k2_[n]);
            for (int c = 0; c < 3; ++c) out.at(c, n) = e * v0_.at(c, n);
        }
        return out;
    }

    /// g2(s) = B(v1(s), v1(s)).
    SpectralField<double> g2(double s) const {
        return from_pairs(s, [s](double, double q) { return std::exp(-s * q); });
    }

    /// v2(t) with the s integral done exactly: int_0^t e^{-(t-s)K} e^{-sq} ds = t e^{-tK} phi1(t (q - K)).
    SpectralField<double> v2(double t) const {
        return from_pairs(t, [t](double kk, double q) {
            const double x = t * (q - kk);
            const double phi = x == 0.0 ? 1.0 : -std::expm1(-x) / x;
            return t * std::exp(-t * kk) * phi;
        });
    }

    SpectralField<double> g3(double s) const {
        const SpectralField<double> a = v1(s), b = v2(s);
        SpectralField<double> out = bilinear(a, b);
        const SpectralField<double> c = bilinear(b, a);
        for (std::size_t i = 0; i < out.raw().size(); ++i) out.raw()[i] += c.raw()[i];
        out.set_t(s);
        return out;
    }

    SpectralField<double> v3(double t) const {
        SpectralField<double> out(grid_, t);
        const QuadratureRule r = gauss_legendre(spec_.s_nodes, 0.0, t);
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
            const double s = r.nodes[i];
            const SpectralField<double> g = g3(s);
            for (std::size_t n = 0; n < grid_.size(); ++n) {
                const double e = r.weights[i] * std::exp(-(t - s) * k2_[n]);
                for (int c = 0; c < 3; ++c) out.at(c, n) += e * g.at(c, n);
            }
        }
        return out;
    }

    /// v1 + ... + v_terms at time t; terms <= p_top.
    SpectralField<double> partial_sum(double t, int terms) const {
        if (terms < 1 || terms > spec_.p_top) throw std::invalid_argument("partial_sum: terms must lie in [1, p_top]");
        SpectralField<double> out = v1(t);
        auto add = [&](const SpectralField<double>& f) {
            for (std::size_t i = 0; i < out.raw().size(); ++i) out.raw()[i] += f.raw()[i];
        };
        if (terms >= 2) add(v2(t));
        if (terms >= 3) add(v3(t));
        return out;
    }

    /// Direct-sum B(x, y) over the supports of x and y.
    SpectralField<double> bilinear(const SpectralField<double>& x, const SpectralField<double>& y) const {
        SpectralField<double> w(grid_, x.t());
        const auto sx = support_of(x), sy = support_of(y);
        for (std::size_t q : sx) {
            const auto xv = x.vec(q);
            for (std::size_t kp : sy) {
                const auto target = sum_node(q, kp);
                if (!target) continue;
                const Vec3 k = grid_.wavevector(*target);
                const double s = xv[0] * k[0] + xv[1] * k[1] + xv[2] * k[2];
                for (int c = 0; c < 3; ++c) w.at(c, *target) += s * y.at(c, kp);
            }
        }
        finish(w);
        return w;
    }

private:
    struct Pair {
        std::size_t node;
        Vec3 coeff;
        double q;
    };

    std::vector<std::size_t> support_of(const SpectralField<double>& f) const {
        std::vector<std::size_t> s;
        for (std::size_t n = 0; n < grid_.size(); ++n)
            if (f.at(0, n) != 0.0 || f.at(1, n) != 0.0 || f.at(2, n) != 0.0) s.push_back(n);
        return s;
    }

    /// Mesh node of k(a) + k(b), if any.
    std::optional<std::size_t> sum_node(std::size_t a, std::size_t b) const {
        const Index3 ia = grid_.unflat(a), ib = grid_.unflat(b);
        Index3 idx{};
        for (int d = 0; d < 3; ++d) idx[d] = ia[d] + ib[d] + grid_.lo(d);
        if (!grid_.contains(idx)) return std::nullopt;
        return grid_.flat(idx);
    }

    /// Applies h^3 P_k in place; the zero mode is cleared.
    void finish(SpectralField<double>& w) const {
        for (std::size_t n = 0; n < grid_.size(); ++n) {
            if (k2_[n] == 0.0) {
                w.set_vec(n, {0.0, 0.0, 0.0});
                continue;
            }
            auto p = solenoidal_project(grid_.wavevector(n), w.vec(n));
            for (auto& x : p) x *= grid_.weight();
            w.set_vec(n, p);
        }
    }

    template <class Kernel>
    SpectralField<double> from_pairs(double t, Kernel kernel) const {
        SpectralField<double> w(grid_, t);
        for (const Pair& pr : pairs_) {
            const double f = kernel(k2_[pr.node], pr.q);
            for (int c = 0; c < 3; ++c) w.at(c, pr.node) += f * pr.coeff[c];
        }
        finish(w);
        return w;
    }

    GridSpec grid_;
    SeriesOracleSpec spec_;
    SpectralField<double> v0_;
    std::vector<double> k2_;
    std::vector<std::size_t> support_;
    std::vector<Pair> pairs_;
};

/// Solver state after `steps` steps to time t against the 1-, 2- and 3-term partial sums.
struct SeriesComparison {
    double t = 0.0;
    std::array<double, 3> rel_error{};  // max-norm difference over max-norm of the solver state
};

inline SeriesComparison series_comparison(const SpectralField<double>& v0, double t, std::uint64_t steps,
                                          const SeriesOracle& oracle, double tol = 0.0) {
    SolverConfig cfg;
    cfg.dt = t / static_cast<double>(steps);
    cfg.tol = tol > 0.0 ? tol : 1e-13 * v0.max_abs();
    Stepper<double> stepper(v0.grid(), cfg);
    SpectralField<double> v = v0;
    for (std::uint64_t i = 0; i < steps; ++i) stepper.step(v);
    SeriesComparison out;
    out.t = t;
    const double scale = v.max_abs();
    for (int terms = 1; terms <= 3; ++terms) out.rel_error[static_cast<std::size_t>(terms - 1)] = max_abs_diff(v, oracle.partial_sum(t, terms)) / scale;
    return out;
}

}  // namespace nsblow
