#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "nsblow/core.hpp"

namespace nsblow {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n from Chebyshev guesses).
inline QuadratureRule gauss_legendre(std::size_t n) {
    if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
    static std::mutex mu;
    static std::map<std::size_t, QuadratureRule> cache;
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(n); it != cache.end()) return it->second;
    }
    QuadratureRule r{std::vector<double>(n), std::vector<double>(n)};
    if (n == 1) {
        r = {{0.0}, {2.0}};
    } else {
        // P_n(x) and P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
        auto legendre = [n](double x, double& dp) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = p2;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            return p1;
        };
        for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                const double dx = legendre(x, dp) / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            legendre(x, dp);
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            r.nodes[i] = -x;
            r.nodes[n - 1 - i] = x;
            r.weights[i] = w;
            r.weights[n - 1 - i] = w;
        }
    }
    std::lock_guard lock(mu);
    cache.emplace(n, r);
    return r;
}

/// Gauss-Legendre rule mapped onto [lo, hi].
inline QuadratureRule gauss_legendre(std::size_t n, double lo, double hi) {
    QuadratureRule r = gauss_legendre(n);
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (std::size_t i = 0; i < n; ++i) {
        r.nodes[i] = mid + half * r.nodes[i];
        r.weights[i] *= half;
    }
    return r;
}

/// Composite Gauss-Legendre: `panels` equal panels of `per_panel` points each.
inline QuadratureRule composite_gauss_legendre(std::size_t panels, std::size_t per_panel, double lo, double hi) {
    QuadratureRule out;
    out.nodes.reserve(panels * per_panel);
    out.weights.reserve(panels * per_panel);
    const double w = (hi - lo) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const QuadratureRule r = gauss_legendre(per_panel, lo + w * static_cast<double>(p), lo + w * static_cast<double>(p + 1));
        out.nodes.insert(out.nodes.end(), r.nodes.begin(), r.nodes.end());
        out.weights.insert(out.weights.end(), r.weights.begin(), r.weights.end());
    }
    return out;
}

/**
 * n-point Gauss-Hermite rule for the standard normal weight:
 * sum_i w_i f(x_i) ~ E[f(X)], X ~ N(0, 1).
 */
inline QuadratureRule gauss_hermite_normal(std::size_t n) {
    if (n == 0) throw std::invalid_argument("gauss_hermite_normal: n must be positive");
    // Newton on the orthonormal physicists' recurrence, then rescale x -> sqrt(2) x, w -> w / sqrt(pi).
    QuadratureRule r{std::vector<double>(n), std::vector<double>(n)};
    const double pim4 = std::pow(kPi, -0.25);
    const std::size_t m = (n + 1) / 2;
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double nn = static_cast<double>(n);
        if (i == 0)
            z = std::sqrt(2.0 * nn + 1.0) - 1.85575 * std::pow(2.0 * nn + 1.0, -0.16667);
        else if (i == 1)
            z -= 1.14 * std::pow(nn, 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * r.nodes[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * r.nodes[1];
        else
            z = 2.0 * z - r.nodes[i - 2];
        double pp = 0.0;
        for (int it = 0; it < 200; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / static_cast<double>(j)) * p2 - std::sqrt((static_cast<double>(j) - 1.0) / static_cast<double>(j)) * p3;
            }
            pp = std::sqrt(2.0 * nn) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        r.nodes[i] = z;
        r.nodes[n - 1 - i] = -z;
        r.weights[i] = 2.0 / (pp * pp);
        r.weights[n - 1 - i] = r.weights[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        r.nodes[i] *= std::sqrt(2.0);
        r.weights[i] /= std::sqrt(kPi);
    }
    return r;
}

}  // namespace nsblow
