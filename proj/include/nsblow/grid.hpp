#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nsblow/core.hpp"

namespace nsblow {

/// Requested mesh bounds in wavevector units, before validation.
struct GridBounds {
    Vec3 k_min{};
    Vec3 k_max{};
    double h = 1.0;
};

/**
 * Uniform truncated k-space mesh containing the origin.
 *
 * Bounds are stored as integer multiples of the step h, so node (i1,i2,i3)
 * sits at k = ((lo1 + i1) h, (lo2 + i2) h, (lo3 + i3) h). Storage is
 * axis-major with the longitudinal (k3) axis contiguous.
 */
class GridSpec {
public:
    GridSpec() = default;

    /// Builds a grid from integer bounds (in units of h); validates like make_grid.
    static GridSpec from_multiples(const Index3& lo, const Index3& hi, double h) {
        if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("grid step h must be positive and finite");
        for (int a = 0; a < 3; ++a) {
            if (lo[a] > hi[a]) throw ConfigError("grid axis " + std::to_string(a + 1) + ": lower bound exceeds upper bound");
            if (lo[a] > 0 || hi[a] < 0) throw ConfigError("grid axis " + std::to_string(a + 1) + " excludes the origin");
        }
        GridSpec g;
        g.lo_ = lo;
        g.hi_ = hi;
        g.h_ = h;
        return g;
    }

    std::int64_t lo(int axis) const { return lo_[axis]; }
    std::int64_t hi(int axis) const { return hi_[axis]; }
    const Index3& lo() const { return lo_; }
    const Index3& hi() const { return hi_; }
    double h() const { return h_; }
    double weight() const { return h_ * h_ * h_; }

    std::size_t n(int axis) const { return static_cast<std::size_t>(hi_[axis] - lo_[axis] + 1); }
    std::size_t size() const { return n(0) * n(1) * n(2); }

    double k_min(int axis) const { return static_cast<double>(lo_[axis]) * h_; }
    double k_max(int axis) const { return static_cast<double>(hi_[axis]) * h_; }
    /// Largest |k_axis| on the mesh.
    double k_abs_max(int axis) const { return static_cast<double>(std::max(-lo_[axis], hi_[axis])) * h_; }

    double k_axis(int axis, std::size_t i) const { return static_cast<double>(lo_[axis] + static_cast<std::int64_t>(i)) * h_; }

    bool contains(const Index3& idx) const {
        for (int a = 0; a < 3; ++a)
            if (idx[a] < 0 || static_cast<std::size_t>(idx[a]) >= n(a)) return false;
        return true;
    }

    Vec3 wavevector(const Index3& idx) const {
        if (!contains(idx)) throw std::out_of_range("grid index out of range");
        return {k_axis(0, idx[0]), k_axis(1, idx[1]), k_axis(2, idx[2])};
    }

    Vec3 wavevector(std::size_t flat_index) const { return wavevector(unflat(flat_index)); }

    /// Inverse of wavevector(); throws when k is not a mesh node.
    Index3 index_of(const Vec3& k) const {
        Index3 idx{};
        for (int a = 0; a < 3; ++a) {
            const double m = k[a] / h_;
            const double r = std::round(m);
            if (std::abs(m - r) > 1e-9 * std::max(1.0, std::abs(m))) throw std::out_of_range("wavevector is not a mesh node");
            idx[a] = static_cast<std::int64_t>(r) - lo_[a];
        }
        if (!contains(idx)) throw std::out_of_range("wavevector outside the mesh");
        return idx;
    }

    std::size_t flat(const Index3& idx) const {
        return (static_cast<std::size_t>(idx[0]) * n(1) + static_cast<std::size_t>(idx[1])) * n(2) + static_cast<std::size_t>(idx[2]);
    }

    Index3 unflat(std::size_t f) const {
        const std::size_t n3 = n(2), n2 = n(1);
        return {static_cast<std::int64_t>(f / (n2 * n3)), static_cast<std::int64_t>((f / n3) % n2), static_cast<std::int64_t>(f % n3)};
    }

    Index3 origin_index() const { return {-lo_[0], -lo_[1], -lo_[2]}; }

    bool operator==(const GridSpec&) const = default;

    std::string describe() const {
        std::ostringstream os;
        os << "[" << k_min(0) << "," << k_max(0) << "]x[" << k_min(1) << "," << k_max(1) << "]x[" << k_min(2) << ","
           << k_max(2) << "] h=" << h_ << " (" << n(0) << "x" << n(1) << "x" << n(2) << ")";
        return os.str();
    }

private:
    Index3 lo_{0, 0, 0};
    Index3 hi_{0, 0, 0};
    double h_ = 1.0;
};

/// Validates bounds and step; bounds must be commensurate with h and contain the origin.
inline GridSpec make_grid(const GridBounds& b) {
    if (!(b.h > 0.0) || !std::isfinite(b.h)) throw ConfigError("grid step h must be positive and finite");
    Index3 lo{}, hi{};
    auto to_multiple = [&](double v, int axis, const char* which) {
        const double m = v / b.h;
        const double r = std::round(m);
        if (!std::isfinite(m) || std::abs(m - r) > 1e-9 * std::max(1.0, std::abs(m)))
            throw ConfigError("grid axis " + std::to_string(axis + 1) + ": " + which + " bound is not a multiple of h");
        return static_cast<std::int64_t>(r);
    };
    for (int a = 0; a < 3; ++a) {
        lo[a] = to_multiple(b.k_min[a], a, "lower");
        hi[a] = to_multiple(b.k_max[a], a, "upper");
    }
    return GridSpec::from_multiples(lo, hi, b.h);
}

/**
 * Real (or, for tests, complex) 3-vector field on a GridSpec.
 *
 * Components are stored planar: component c occupies [c*N, (c+1)*N).
 */
template <FieldScalar T>
class SpectralField {
public:
    using value_type = T;

    SpectralField() = default;
    explicit SpectralField(const GridSpec& grid, double t = 0.0) : grid_(grid), data_(3 * grid.size(), T{}), t_(t) {}

    const GridSpec& grid() const { return grid_; }
    double t() const { return t_; }
    void set_t(double t) { t_ = t; }

    std::size_t size() const { return grid_.size(); }

    std::span<T> component(int c) { return {data_.data() + static_cast<std::size_t>(c) * size(), size()}; }
    std::span<const T> component(int c) const { return {data_.data() + static_cast<std::size_t>(c) * size(), size()}; }

    T& at(int c, std::size_t node) { return data_[static_cast<std::size_t>(c) * size() + node]; }
    const T& at(int c, std::size_t node) const { return data_[static_cast<std::size_t>(c) * size() + node]; }

    std::array<T, 3> vec(std::size_t node) const { return {at(0, node), at(1, node), at(2, node)}; }
    void set_vec(std::size_t node, const std::array<T, 3>& v) {
        for (int c = 0; c < 3; ++c) at(c, node) = v[c];
    }

    std::span<T> raw() { return data_; }
    std::span<const T> raw() const { return data_; }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](const T& x) { return finite(x); });
    }

    /// Max-norm over nodes and components.
    double max_abs() const {
        double m = 0.0;
        for (const T& x : data_) m = std::max(m, std::abs(x));
        return m;
    }

    bool operator==(const SpectralField&) const = default;

private:
    GridSpec grid_;
    std::vector<T> data_;
    double t_ = 0.0;
};

/// Max-norm of the difference of two fields on the same grid.
template <FieldScalar T>
double max_abs_diff(const SpectralField<T>& a, const SpectralField<T>& b) {
    if (!(a.grid() == b.grid())) throw std::invalid_argument("fields live on different grids");
    double m = 0.0;
    auto ra = a.raw();
    auto rb = b.raw();
    for (std::size_t i = 0; i < ra.size(); ++i) m = std::max(m, std::abs(ra[i] - rb[i]));
    return m;
}

/// Promotes a real field to the complex test path.
inline SpectralField<std::complex<double>> to_complex(const SpectralField<double>& v) {
    SpectralField<std::complex<double>> out(v.grid(), v.t());
    auto src = v.raw();
    auto dst = out.raw();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i];
    return out;
}

}  // namespace nsblow
