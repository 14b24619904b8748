#pragma once

// Independent reference computations used only by tests.

#include <array>
#include <cmath>
#include <complex>
#include <random>

#include "nsblow/grid.hpp"

namespace nsblow::oracle {

/// B[v](k) = h^3 P_k sum_{k'} <v(k-k'), k> v(k') by the literal double sum over mesh nodes.
template <class T>
SpectralField<T> direct_interaction(const SpectralField<T>& v) {
    const GridSpec& g = v.grid();
    SpectralField<T> out(g, v.t());
    const auto n1 = static_cast<std::int64_t>(g.n(1)), n2 = static_cast<std::int64_t>(g.n(2));
    // k' index ip pairs with k - k' index ik - ip - lo; only pairs with both on the mesh are visited
    auto range = [&](std::int64_t ik, int a) {
        const std::int64_t hi = ik - g.lo(a);
        return std::array<std::int64_t, 2>{std::max<std::int64_t>(0, hi - static_cast<std::int64_t>(g.n(a)) + 1),
                                           std::min<std::int64_t>(static_cast<std::int64_t>(g.n(a)) - 1, hi)};
    };
    for (std::size_t n = 0; n < g.size(); ++n) {
        const Index3 ik = g.unflat(n);
        const Vec3 k = g.wavevector(n);
        const double kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if (kk == 0.0) continue;
        std::array<T, 3> w{};
        const auto r0 = range(ik[0], 0), r1 = range(ik[1], 1), r2 = range(ik[2], 2);
        for (std::int64_t p0 = r0[0]; p0 <= r0[1]; ++p0)
            for (std::int64_t p1 = r1[0]; p1 <= r1[1]; ++p1)
                for (std::int64_t p2 = r2[0]; p2 <= r2[1]; ++p2) {
                    const std::size_t m = static_cast<std::size_t>((p0 * n1 + p1) * n2 + p2);
                    const std::size_t d = g.flat({ik[0] - p0 - g.lo(0), ik[1] - p1 - g.lo(1), ik[2] - p2 - g.lo(2)});
                    const T c = v.at(0, d) * k[0] + v.at(1, d) * k[1] + v.at(2, d) * k[2];
                    for (int b = 0; b < 3; ++b) w[b] += c * v.at(b, m);
                }
        const T s = (w[0] * k[0] + w[1] * k[1] + w[2] * k[2]) / kk;
        for (int b = 0; b < 3; ++b) out.at(b, n) = g.weight() * (w[b] - s * k[b]);
    }
    return out;
}

/// Random field projected onto divergence-free vectors, zero mode cleared.
template <class T>
SpectralField<T> random_solenoidal(const GridSpec& g, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, scale);
    SpectralField<T> v(g);
    for (std::size_t n = 0; n < g.size(); ++n) {
        const Vec3 k = g.wavevector(n);
        const double kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        std::array<T, 3> x{};
        for (auto& c : x) {
            if constexpr (std::is_same_v<T, double>)
                c = nd(rng);
            else {
                const double re = nd(rng);
                c = T(re, nd(rng));
            }
        }
        if (kk == 0.0) continue;
        const T s = (x[0] * k[0] + x[1] * k[1] + x[2] * k[2]) / kk;
        for (int b = 0; b < 3; ++b) v.at(b, n) = x[b] - s * k[b];
    }
    return v;
}

/// max |a - b| / max |b| over all components.
template <class T>
double relative_max_error(const SpectralField<T>& a, const SpectralField<T>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.raw().size(); ++i) {
        num = std::max(num, std::abs(a.raw()[i] - b.raw()[i]));
        den = std::max(den, std::abs(b.raw()[i]));
    }
    return den > 0.0 ? num / den : num;
}

}  // namespace nsblow::oracle
