#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <complex>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <span>
#include <string>

#include "nsblow/core.hpp"
#include "nsblow/grid.hpp"

namespace nsblow {

/// Smallest 7-smooth integer >= n.
inline std::size_t fft_friendly_size(std::size_t n) {
    for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
        std::size_t r = m;
        for (std::size_t f : {2u, 3u, 5u, 7u})
            while (r % f == 0) r /= f;
        if (r == 1) return m;
    }
}

/// Worker count from NSBLOW_THREADS (default 1).
inline int worker_count() {
    if (const char* s = std::getenv("NSBLOW_THREADS")) {
        const int n = std::atoi(s);
        if (n > 0) return n;
    }
    return 1;
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

inline void init_fftw_threads() {
    static std::once_flag once;
    std::call_once(once, [] {
        fftw_init_threads();
        fftw_plan_with_nthreads(worker_count());
    });
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

template <class U>
using fftw_buffer = std::unique_ptr<U[], FftwFree>;

template <class U>
fftw_buffer<U> fftw_alloc(std::size_t n) {
    auto* p = static_cast<U*>(fftw_malloc(sizeof(U) * std::max<std::size_t>(n, 1)));
    if (p == nullptr) throw std::bad_alloc();
    return fftw_buffer<U>(p);
}

struct PlanDeleter {
    void operator()(fftw_plan p) const noexcept {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};
using unique_plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDeleter>;

}  // namespace detail

/**
 * Zero-padded scratch for linear (non-circular) convolution of live-grid data.
 *
 * Sum index c = i + j spans [0, 2n-1); only the window [m, m+n) with m = -lo
 * is read back. Padding P >= max(m + n, 2n - 1 - m) keeps every wrapped sum
 * out of that window, so the window equals the linear convolution.
 * Transforms are applied one axis at a time and skip lines that are known to
 * be zero (forward) or whose outputs are never read (inverse); only the
 * window of sums that lands back on the live grid is materialized.
 * Plans use FFTW_ESTIMATE so results are reproducible run to run.
 *
 * Spectral layout: [P0][P1][Q2] with Q2 = P2/2+1 (real) or P2 (complex).
 */
template <FieldScalar T>
class PaddedWorkspace {
public:
    static constexpr int kSlots = 3;
    static constexpr bool kComplex = is_complex<T>::value;

    explicit PaddedWorkspace(const GridSpec& grid) : grid_(grid) {
        detail::init_fftw_threads();
        for (int a = 0; a < 3; ++a) {
            live_[a] = grid.n(a);
            window_[a] = static_cast<std::size_t>(-grid.lo(a));
            padded_[a] = fft_friendly_size(min_padding(live_[a], window_[a]));
        }
        q2_ = kComplex ? padded_[2] : padded_[2] / 2 + 1;
        spectral_size_ = padded_[0] * padded_[1] * q2_;
        row_size_ = live_[0] * live_[1] * padded_[2];

        rows_ = detail::fftw_alloc<T>(row_size_);
        std::fill(rows_.get(), rows_.get() + row_size_, T{});
        for (auto& s : slots_) s = detail::fftw_alloc<fftw_complex>(spectral_size_);
        product_ = detail::fftw_alloc<fftw_complex>(spectral_size_);

        std::lock_guard lock(detail::fftw_planner_mutex());
        for (int s = 0; s < kSlots; ++s) {
            fwd_rows_[s] = plan_rows(slots_[s].get(), true);
            fwd_axis1_[s] = plan_axis1(slots_[s].get(), 0, FFTW_FORWARD);
            fwd_axis0_[s] = plan_axis0(slots_[s].get(), FFTW_FORWARD);
        }
        inv_axis0_ = plan_axis0(product_.get(), FFTW_BACKWARD);
        inv_axis1_ = plan_axis1(product_.get(), window_[0], FFTW_BACKWARD);
        inv_rows_ = plan_rows(product_.get(), false);
    }

    PaddedWorkspace(const PaddedWorkspace&) = delete;
    PaddedWorkspace& operator=(const PaddedWorkspace&) = delete;

    const GridSpec& grid() const { return grid_; }
    const std::array<std::size_t, 3>& padded_extent() const { return padded_; }

    /// Smallest alias-free period for n live points whose window starts at sum index m.
    static std::size_t min_padding(std::size_t n, std::size_t m) { return std::max(m + n, 2 * n - 1 - m); }
    const std::array<std::size_t, 3>& live_extent() const { return live_; }

    /// Zero-pads live-grid data (axis-major, k3 contiguous) and transforms it into a slot.
    void forward(std::span<const T> live, int slot) {
        T* buf = rows_.get();
        for (std::size_t r = 0; r < live_[0] * live_[1]; ++r) {
            const T* src = live.data() + r * live_[2];
            T* dst = buf + r * padded_[2];
            std::copy(src, src + live_[2], dst);
            std::fill(dst + live_[2], dst + padded_[2], T{});
        }
        fftw_complex* out = slots_[slot].get();
        // Lines not written by the row pass must read as zero.
        for (std::size_t i0 = 0; i0 < live_[0]; ++i0) {
            fftw_complex* plane = out + i0 * padded_[1] * q2_;
            std::fill(plane[0] + live_[1] * q2_ * 2, plane[0] + padded_[1] * q2_ * 2, 0.0);
        }
        std::fill(out[0] + live_[0] * padded_[1] * q2_ * 2, out[0] + spectral_size_ * 2, 0.0);
        fftw_execute(fwd_rows_[slot].get());
        fftw_execute(fwd_axis1_[slot].get());
        fftw_execute(fwd_axis0_[slot].get());
    }

    /// Linear convolution of two transformed slots; the live-grid window lands in the row buffer.
    void convolve(int slot_a, int slot_b) {
        const fftw_complex* a = slots_[slot_a].get();
        const fftw_complex* b = slots_[slot_b].get();
        fftw_complex* p = product_.get();
        const double scale = 1.0 / static_cast<double>(padded_[0] * padded_[1] * padded_[2]);
        for (std::size_t i = 0; i < spectral_size_; ++i) {
            const double re = a[i][0] * b[i][0] - a[i][1] * b[i][1];
            const double im = a[i][0] * b[i][1] + a[i][1] * b[i][0];
            p[i][0] = re * scale;
            p[i][1] = im * scale;
        }
        fftw_execute(inv_axis0_.get());
        fftw_execute(inv_axis1_.get());
        fftw_execute(inv_rows_.get());
    }

    /// Convolution values along k3 for the sum indices (c0, c1); c_a in [-lo_a, -lo_a + n_a).
    const T* result_row(std::size_t c0, std::size_t c1) const {
        return rows_.get() + ((c0 - window_[0]) * live_[1] + (c1 - window_[1])) * padded_[2];
    }

private:
    static int as_int(std::size_t x) { return static_cast<int>(x); }

    // Transforms along k3 for the live (forward) or windowed (inverse) rows.
    detail::unique_plan plan_rows(fftw_complex* spec, bool forward) {
        const std::size_t off = forward ? 0 : (window_[0] * padded_[1] + window_[1]) * q2_;
        fftw_iodim dim{as_int(padded_[2]), 1, 1};
        fftw_iodim many[2] = {{as_int(live_[0]), as_int(padded_[1] * q2_), as_int(live_[1] * padded_[2])},
                              {as_int(live_[1]), as_int(q2_), as_int(padded_[2])}};
        if (forward)
            for (auto& m : many) std::swap(m.is, m.os);
        fftw_plan p = nullptr;
        if constexpr (kComplex) {
            auto* rows = reinterpret_cast<fftw_complex*>(rows_.get());
            p = forward ? fftw_plan_guru_dft(1, &dim, 2, many, rows, spec, FFTW_FORWARD, FFTW_ESTIMATE)
                        : fftw_plan_guru_dft(1, &dim, 2, many, spec + off, rows, FFTW_BACKWARD, FFTW_ESTIMATE);
        } else {
            p = forward ? fftw_plan_guru_dft_r2c(1, &dim, 2, many, rows_.get(), spec, FFTW_ESTIMATE)
                        : fftw_plan_guru_dft_c2r(1, &dim, 2, many, spec + off, rows_.get(), FFTW_ESTIMATE);
        }
        return checked(p);
    }

    // In-place transforms along k2 for n0 planes starting at plane `first`.
    detail::unique_plan plan_axis1(fftw_complex* spec, std::size_t first, int sign) {
        fftw_iodim dim{as_int(padded_[1]), as_int(q2_), as_int(q2_)};
        fftw_iodim many[2] = {{as_int(live_[0]), as_int(padded_[1] * q2_), as_int(padded_[1] * q2_)},
                              {as_int(q2_), 1, 1}};
        fftw_complex* base = spec + first * padded_[1] * q2_;
        return checked(fftw_plan_guru_dft(1, &dim, 2, many, base, base, sign, FFTW_ESTIMATE));
    }

    // In-place transforms along k1 for every (k2, k3) column.
    detail::unique_plan plan_axis0(fftw_complex* spec, int sign) {
        const int stride = as_int(padded_[1] * q2_);
        fftw_iodim dim{as_int(padded_[0]), stride, stride};
        fftw_iodim many{stride, 1, 1};
        return checked(fftw_plan_guru_dft(1, &dim, 1, &many, spec, spec, sign, FFTW_ESTIMATE));
    }

    static detail::unique_plan checked(fftw_plan p) {
        if (p == nullptr) throw NumericError("FFTW plan creation failed");
        return detail::unique_plan(p);
    }

    GridSpec grid_;
    std::array<std::size_t, 3> live_{};
    std::array<std::size_t, 3> padded_{};
    std::array<std::size_t, 3> window_{};
    std::size_t q2_ = 0;
    std::size_t spectral_size_ = 0;
    std::size_t row_size_ = 0;
    detail::fftw_buffer<T> rows_;  // [n0][n1][P2]
    std::array<detail::fftw_buffer<fftw_complex>, kSlots> slots_;
    detail::fftw_buffer<fftw_complex> product_;
    std::array<detail::unique_plan, kSlots> fwd_rows_, fwd_axis1_, fwd_axis0_;
    detail::unique_plan inv_axis0_, inv_axis1_, inv_rows_;
};

}  // namespace nsblow
