#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "nsblow/core.hpp"
#include "nsblow/fft.hpp"
#include "nsblow/grid.hpp"

namespace nsblow {

/// Solenoidal projector P_k v = v - (<v,k>/|k|^2) k. The caller handles k = 0.
template <class S>
std::array<S, 3> solenoidal_project(const Vec3& k, const std::array<S, 3>& v) {
    const double kk = norm2(k);
    if (kk == 0.0) throw std::invalid_argument("solenoidal projection at k = 0");
    const S c = (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) / kk;
    return {v[0] - c * k[0], v[1] - c * k[1], v[2] - c * k[2]};
}

/// Projects every node of a field in place; the zero mode is set to 0.
template <FieldScalar T>
void project_field(SpectralField<T>& v) {
    const GridSpec& g = v.grid();
    for (std::size_t n = 0; n < g.size(); ++n) {
        const Vec3 k = g.wavevector(n);
        if (norm2(k) == 0.0)
            v.set_vec(n, {T{}, T{}, T{}});
        else
            v.set_vec(n, solenoidal_project(k, v.vec(n)));
    }
}

/**
 * Quadratic interaction B[v](k) = h^3 sum_{k'} <v(k-k'), k> P_k v(k').
 *
 * The six pairwise linear convolutions C_ab = v_a * v_b are formed on the
 * doubled workspace; then w_b = sum_a k_a C_ab and B = h^3 P_k w.
 * Mesh nodes k - k' outside the truncated grid contribute nothing.
 */
template <FieldScalar T>
class InteractionOperator {
public:
    explicit InteractionOperator(const GridSpec& grid) : grid_(grid), ws_(grid) {
        k_.resize(grid.size());
        for (std::size_t n = 0; n < grid.size(); ++n) k_[n] = grid.wavevector(n);
    }

    const GridSpec& grid() const { return grid_; }
    const std::array<std::size_t, 3>& padded_extent() const { return ws_.padded_extent(); }

    /// out = B[v]; out must live on the same grid.
    void apply(const SpectralField<T>& v, SpectralField<T>& out) {
        if (!(v.grid() == grid_) || !(out.grid() == grid_)) throw std::invalid_argument("interaction: grid mismatch");
        for (int a = 0; a < 3; ++a) ws_.forward(v.component(a), a);
        out.fill(T{});

        const std::size_t n0 = grid_.n(0), n1 = grid_.n(1), n2 = grid_.n(2);
        const std::size_t o0 = static_cast<std::size_t>(-grid_.lo(0));
        const std::size_t o1 = static_cast<std::size_t>(-grid_.lo(1));
        const std::size_t o2 = static_cast<std::size_t>(-grid_.lo(2));
        for (int a = 0; a < 3; ++a) {
            for (int b = a; b < 3; ++b) {
                ws_.convolve(a, b);
                auto wb = out.component(b);
                auto wa = out.component(a);
                for (std::size_t i0 = 0; i0 < n0; ++i0)
                    for (std::size_t i1 = 0; i1 < n1; ++i1) {
                        const T* row = ws_.result_row(i0 + o0, i1 + o1) + o2;
                        const std::size_t base = (i0 * n1 + i1) * n2;
                        for (std::size_t i2 = 0; i2 < n2; ++i2) {
                            const Vec3& k = k_[base + i2];
                            const T c = row[i2];
                            wb[base + i2] += k[a] * c;
                            if (a != b) wa[base + i2] += k[b] * c;
                        }
                    }
            }
        }

        const double w = grid_.weight();
        for (std::size_t n = 0; n < grid_.size(); ++n) {
            const Vec3& k = k_[n];
            const double kk = norm2(k);
            if (kk == 0.0) {
                out.set_vec(n, {T{}, T{}, T{}});
                continue;
            }
            const T x0 = out.at(0, n), x1 = out.at(1, n), x2 = out.at(2, n);
            const T c = (x0 * k[0] + x1 * k[1] + x2 * k[2]) / kk;
            out.at(0, n) = w * (x0 - c * k[0]);
            out.at(1, n) = w * (x1 - c * k[1]);
            out.at(2, n) = w * (x2 - c * k[2]);
        }
    }

    SpectralField<T> operator()(const SpectralField<T>& v) {
        SpectralField<T> out(grid_, v.t());
        apply(v, out);
        return out;
    }

private:
    GridSpec grid_;
    PaddedWorkspace<T> ws_;
    std::vector<Vec3> k_;
};

struct SolverConfig {
    double dt = 1e-7;
    double tol = 1e-8;
    int max_corrector_iters = 50;
    bool nonlinear_enabled = true;

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("solver.dt must be positive");
        if (!(tol > 0.0) || !std::isfinite(tol)) throw ConfigError("solver.tol must be positive");
        if (max_corrector_iters < 1) throw ConfigError("solver.max_corrector_iters must be >= 1");
    }
};

struct StepReport {
    int corrector_iterations = 0;
    double final_residual = 0.0;
    double wall_time = 0.0;
};

enum class StepFailureKind { corrector_divergence, nonfinite };

/// Thrown by Stepper::step; the input state is left untouched.
class StepFailure : public NumericError {
public:
    StepFailure(StepFailureKind kind, const std::string& what, StepReport report)
        : NumericError(what), kind_(kind), report_(report) {}
    StepFailureKind kind() const { return kind_; }
    const StepReport& report() const { return report_; }

private:
    StepFailureKind kind_;
    StepReport report_;
};

/**
 * Integrating-factor predictor-corrector for the Duhamel form of the equation.
 *
 *   predictor: V1 = E (v + dt B[v])
 *   corrector: V_{j+1} = E v + dt/2 (E B[v] + B[V_j])
 *
 * with E = exp(-dt |k|^2) applied per mode, iterated until the max-norm update
 * drops to tol. The accepted state is re-projected and its zero mode cleared.
 */
template <FieldScalar T>
class Stepper {
public:
    Stepper(const GridSpec& grid, SolverConfig cfg)
        : grid_(grid), cfg_(cfg), op_(grid), b0_(grid), bj_(grid), base_(grid), cur_(grid), next_(grid) {
        cfg_.validate();
        decay_.resize(grid.size());
        for (std::size_t n = 0; n < grid.size(); ++n) decay_[n] = std::exp(-cfg_.dt * norm2(grid.wavevector(n)));
    }

    const SolverConfig& config() const { return cfg_; }
    const GridSpec& grid() const { return grid_; }
    InteractionOperator<T>& interaction() { return op_; }

    /// Advances v by one step of size dt (t is set to step_index * dt by callers that track steps).
    StepReport step(SpectralField<T>& v) {
        const auto t0 = std::chrono::steady_clock::now();
        StepReport rep;
        const std::size_t N = grid_.size();
        const double dt = cfg_.dt;

        if (!cfg_.nonlinear_enabled) {
            for (int c = 0; c < 3; ++c) {
                auto x = v.component(c);
                for (std::size_t n = 0; n < N; ++n) x[n] *= decay_[n];
            }
            v.set_t(v.t() + dt);
            rep.wall_time = elapsed(t0);
            return rep;
        }

        op_.apply(v, b0_);
        for (int c = 0; c < 3; ++c) {
            auto x = v.component(c);
            auto b = b0_.component(c);
            auto base = base_.component(c);
            auto cur = cur_.component(c);
            for (std::size_t n = 0; n < N; ++n) {
                base[n] = decay_[n] * x[n] + 0.5 * dt * decay_[n] * b[n];
                cur[n] = decay_[n] * (x[n] + dt * b[n]);
            }
        }

        double residual = 0.0;
        bool converged = false;
        for (int j = 1; j <= cfg_.max_corrector_iters; ++j) {
            op_.apply(cur_, bj_);
            residual = 0.0;
            for (int c = 0; c < 3; ++c) {
                auto base = base_.component(c);
                auto b = bj_.component(c);
                auto cur = cur_.component(c);
                auto nxt = next_.component(c);
                for (std::size_t n = 0; n < N; ++n) {
                    nxt[n] = base[n] + 0.5 * dt * b[n];
                    residual = std::max(residual, std::abs(nxt[n] - cur[n]));
                }
            }
            std::swap(cur_, next_);
            rep.corrector_iterations = j;
            rep.final_residual = residual;
            if (!std::isfinite(residual)) break;
            if (residual <= cfg_.tol) {
                converged = true;
                break;
            }
        }
        rep.wall_time = elapsed(t0);

        if (!std::isfinite(residual) || !cur_.all_finite())
            throw StepFailure(StepFailureKind::nonfinite, "non-finite state during corrector", rep);
        if (!converged)
            throw StepFailure(StepFailureKind::corrector_divergence,
                              "corrector did not reach tol within " + std::to_string(cfg_.max_corrector_iters) +
                                  " iterations (residual " + std::to_string(residual) + ")",
                              rep);

        project_field(cur_);
        const double t_next = v.t() + dt;
        for (int c = 0; c < 3; ++c) {
            auto src = cur_.component(c);
            auto dst = v.component(c);
            std::copy(src.begin(), src.end(), dst.begin());
        }
        v.set_t(t_next);
        return rep;
    }

private:
    static double elapsed(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    GridSpec grid_;
    SolverConfig cfg_;
    InteractionOperator<T> op_;
    std::vector<double> decay_;
    SpectralField<T> b0_, bj_, base_, cur_, next_;
};

/// max over nodes of |<v,k>| / (|k| |v| + eps); the incompressibility defect.
template <FieldScalar T>
double solenoidal_defect(const SpectralField<T>& v, double eps = 1e-300) {
    const GridSpec& g = v.grid();
    double m = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        const Vec3 k = g.wavevector(n);
        const auto x = v.vec(n);
        const T d = x[0] * k[0] + x[1] * k[1] + x[2] * k[2];
        const double vn = std::sqrt(abs2(x[0]) + abs2(x[1]) + abs2(x[2]));
        if (vn == 0.0) continue;
        m = std::max(m, std::abs(d) / (norm(k) * vn + eps));
    }
    return m;
}

}  // namespace nsblow
