#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "nsblow/core.hpp"
#include "nsblow/diagnostics.hpp"

namespace nsblow {

/// Ordinary least squares y = intercept + slope * x with standard OLS errors.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_stderr = 0.0;
    double intercept_stderr = 0.0;
    double cov_slope_intercept = 0.0;
    std::size_t n = 0;
};

inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("least_squares: size mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw NumericError("least_squares: need at least 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw NumericError("least_squares: degenerate abscissa");
    LineFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        sse += r * r;
    }
    f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    if (n > 2) {
        const double s2 = sse / static_cast<double>(n - 2);
        f.slope_stderr = std::sqrt(s2 / sxx);
        f.intercept_stderr = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
        f.cov_slope_intercept = -mx * s2 / sxx;
    }
    return f;
}

// ---------------------------------------------------------------------------
// Exponential decay rate of the longitudinal energy marginal
// ---------------------------------------------------------------------------

struct DecayFit {
    double t = 0.0;
    double slope = 0.0;  // d log E3 / d k3
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_stderr = 0.0;
    std::size_t n_points = 0;
};

/**
 * Indices of strict discrete local maxima (f[i-1] < f[i] > f[i+1]); a flat
 * top counts once, at its leftmost point. Endpoints never qualify.
 */
inline std::vector<std::size_t> local_maxima(std::span<const double> f, std::size_t first = 0) {
    std::vector<std::size_t> out;
    const std::size_t n = f.size();
    std::size_t i = std::max<std::size_t>(first, 1);
    while (i + 1 < n) {
        if (f[i] > f[i - 1]) {
            std::size_t j = i;
            while (j + 1 < n && f[j + 1] == f[i]) ++j;
            if (j + 1 < n && f[j + 1] < f[i]) out.push_back(i);
            i = j + 1;
        } else {
            ++i;
        }
    }
    return out;
}

/**
 * Fits log(profile) at its local maxima with k3 >= k3_lo by a straight line.
 * A window without interior maxima that is monotonically non-increasing
 * (a pure exponential) is fitted on every point.
 */
inline DecayFit fit_decay_rate(const MarginalProfile& profile, double k3_lo) {
    if (profile.axis != 3) throw std::invalid_argument("fit_decay_rate: profile must be along axis 3");
    const auto& k = profile.abscissa;
    const auto& f = profile.density;
    std::size_t first = 0;
    while (first < k.size() && k[first] < k3_lo) ++first;
    if (first >= k.size()) throw NumericError("fit_decay_rate: k3_lo beyond the profile range");

    // A maximum at `first` needs its left neighbour, which may lie below k3_lo.
    std::vector<std::size_t> idx = local_maxima(f, first);
    if (idx.empty()) {
        bool monotone = true;
        for (std::size_t i = first + 1; i < f.size(); ++i)
            if (f[i] > f[i - 1]) monotone = false;
        if (monotone)
            for (std::size_t i = first; i < f.size(); ++i) idx.push_back(i);
    }
    if (idx.size() < 5) throw NumericError("fit_decay_rate: fewer than 5 local maxima above k3_lo");
    std::vector<double> x, y;
    for (std::size_t i : idx) {
        if (!(f[i] > 0.0)) throw NumericError("fit_decay_rate: non-positive maximum");
        x.push_back(k[i]);
        y.push_back(std::log(f[i]));
    }
    const LineFit lf = least_squares(x, y);
    return {profile.t, lf.slope, lf.intercept, lf.r_squared, lf.slope_stderr, idx.size()};
}

// ---------------------------------------------------------------------------
// Critical time from the vanishing decay rate
// ---------------------------------------------------------------------------

struct CriticalTimeEstimate {
    double tau_star = 0.0;
    double stderr = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    double r_squared = 0.0;
    std::size_t n_fits = 0;
    bool overestimate = true;  // modes beyond the mesh only hasten the blow-up
};

/// Regresses decay slope against t; tau_star is where the line reaches zero.
inline CriticalTimeEstimate estimate_critical_time(std::span<const DecayFit> fits) {
    if (fits.size() < 3) throw NumericError("estimate_critical_time: need at least 3 fits");
    std::vector<double> t, s;
    double tmax = -std::numeric_limits<double>::infinity();
    double tmin = std::numeric_limits<double>::infinity();
    for (const auto& f : fits) {
        if (!(f.slope < 0.0)) throw NumericError("estimate_critical_time: decay slopes must be negative");
        t.push_back(f.t);
        s.push_back(f.slope);
        tmax = std::max(tmax, f.t);
        tmin = std::min(tmin, f.t);
    }
    const LineFit lf = least_squares(t, s);
    if (!(lf.slope > 0.0)) throw NumericError("estimate_critical_time: slopes do not trend to zero");
    CriticalTimeEstimate e;
    e.tau_star = -lf.intercept / lf.slope;
    if (!(e.tau_star > tmax)) throw NumericError("estimate_critical_time: intercept precedes the last input time");
    // delta method on tau = -b/m
    const double dm = lf.intercept / (lf.slope * lf.slope);
    const double db = -1.0 / lf.slope;
    const double var = dm * dm * lf.slope_stderr * lf.slope_stderr + db * db * lf.intercept_stderr * lf.intercept_stderr +
                       2.0 * dm * db * lf.cov_slope_intercept;
    e.stderr = std::sqrt(std::max(var, 0.0));
    e.window_lo = tmin;
    e.window_hi = tmax;
    e.r_squared = lf.r_squared;
    e.n_fits = fits.size();
    return e;
}

// ---------------------------------------------------------------------------
// Power-law divergence exponent
// ---------------------------------------------------------------------------

struct PowerLawFit {
    double alpha = 0.0;
    double alpha_stderr = 0.0;
    double log_prefactor = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    double r_squared = 0.0;
    std::size_t n_points = 0;
};

/// Slope of log Q against log 1/(tau_star - t) over t in [window_lo, window_hi].
inline PowerLawFit fit_power_law(std::span<const double> t, std::span<const double> q, double tau_star, double window_lo,
                                 double window_hi) {
    if (t.size() != q.size()) throw std::invalid_argument("fit_power_law: size mismatch");
    if (!(window_hi < tau_star)) throw NumericError("fit_power_law: window must end before tau_star");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < window_lo || t[i] > window_hi) continue;
        if (!(q[i] > 0.0)) throw NumericError("fit_power_law: non-positive value in window");
        x.push_back(std::log(1.0 / (tau_star - t[i])));
        y.push_back(std::log(q[i]));
    }
    if (x.empty()) throw NumericError("fit_power_law: empty window");
    if (x.size() < 2) throw NumericError("fit_power_law: degenerate regression (one point)");
    const LineFit lf = least_squares(x, y);
    return {lf.slope, lf.slope_stderr, lf.intercept, window_lo, window_hi, lf.r_squared, x.size()};
}

}  // namespace nsblow
