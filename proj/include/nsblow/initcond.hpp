#pragma once

#include <cmath>

#include "nsblow/core.hpp"
#include "nsblow/diagnostics.hpp"
#include "nsblow/grid.hpp"

namespace nsblow {

enum class SolutionType { I, II };

inline const char* to_string(SolutionType t) { return t == SolutionType::I ? "I" : "II"; }

/// Initial data family: sign * C * profile(k) on the ball |k - (0,0,a)| <= r.
struct InitialDataSpec {
    double a = 20.0;
    double r = 17.0;
    int sign = +1;
    double target_energy = 200.0 * kTwoPiCubed;
    double C = 1.0;

    /// Under the interaction as written, +1 data seed lobes of alternating sign (type II), -1 data lobes of one sign (type I).
    SolutionType type() const { return sign < 0 ? SolutionType::I : SolutionType::II; }

    void validate() const {
        if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("init.a must be positive");
        if (!(r > 0.0) || !(r < a)) throw ConfigError("init.r must satisfy 0 < r < a");
        if (sign != 1 && sign != -1) throw ConfigError("init.sign must be +1 or -1");
        if (!(target_energy > 0.0) || !std::isfinite(target_energy)) throw ConfigError("init.target_energy must be positive");
        if (!(C > 0.0) || !std::isfinite(C)) throw ConfigError("init amplitude C must be positive");
    }
};

/// Unit-amplitude profile (k1, k2, -(k1^2+k2^2)/k3) exp(-|k-k0|^2/2)/(2pi)^{3/2}, cut off outside the ball.
inline Vec3 base_profile(const Vec3& k, const InitialDataSpec& spec) {
    const Vec3 d{k[0], k[1], k[2] - spec.a};
    if (norm2(d) > spec.r * spec.r) return {0.0, 0.0, 0.0};
    const double g = std::exp(-0.5 * norm2(d)) / std::pow(2.0 * kPi, 1.5);
    const double perp2 = k[0] * k[0] + k[1] * k[1];
    return {k[0] * g, k[1] * g, -perp2 / k[2] * g};
}

/// Samples sign * C * profile on the grid at t = 0.
inline SpectralField<double> build_initial_field(const InitialDataSpec& spec, const GridSpec& grid) {
    spec.validate();
    SpectralField<double> v(grid, 0.0);
    const double amp = spec.sign * spec.C;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const Vec3 p = base_profile(grid.wavevector(n), spec);
        v.set_vec(n, {amp * p[0], amp * p[1], amp * p[2]});
    }
    return v;
}

/// Sets C so that the discrete energy of C * profile equals target_energy (energy is quadratic in C).
inline InitialDataSpec calibrate_amplitude(InitialDataSpec spec, const GridSpec& grid) {
    if (!(spec.target_energy > 0.0)) throw ConfigError("init.target_energy must be positive");
    InitialDataSpec unit = spec;
    unit.C = 1.0;
    unit.sign = 1;
    const double e_unit = totals(build_initial_field(unit, grid)).energy;
    if (!(e_unit > 0.0)) throw ConfigError("initial-data support contains no mesh nodes");
    spec.C = std::sqrt(spec.target_energy / e_unit);
    return spec;
}

}  // namespace nsblow
