#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nsblow/core.hpp"
#include "nsblow/grid.hpp"

namespace nsblow {

/**
 * Checkpoint layout (all integers and floats little-endian):
 *
 *   "LSNS1"                       5 bytes magic (format version 1)
 *   lo1 hi1 lo2 hi2 lo3 hi3       int64, bounds in units of h
 *   h, t                          float64
 *   step                          uint64, solver step counter
 *   v1 v2 v3 per node             float64 triples, axis-major (k3 fastest)
 */
inline constexpr char kCheckpointMagic[5] = {'L', 'S', 'N', 'S', '1'};

struct Checkpoint {
    SpectralField<double> field;
    std::uint64_t step = 0;
};

namespace detail {

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t x) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>((x >> (8 * b)) & 0xffu));
}

inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t x = 0;
    for (int b = 0; b < 8; ++b) x |= static_cast<std::uint64_t>(p[b]) << (8 * b);
    return x;
}

}  // namespace detail

inline std::vector<unsigned char> encode_checkpoint(const SpectralField<double>& v, std::uint64_t step) {
    const GridSpec& g = v.grid();
    std::vector<unsigned char> out;
    out.reserve(5 + 6 * 8 + 3 * 8 + 24 * g.size());
    out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 5);
    for (int a = 0; a < 3; ++a) {
        detail::put_u64(out, static_cast<std::uint64_t>(g.lo(a)));
        detail::put_u64(out, static_cast<std::uint64_t>(g.hi(a)));
    }
    detail::put_u64(out, std::bit_cast<std::uint64_t>(g.h()));
    detail::put_u64(out, std::bit_cast<std::uint64_t>(v.t()));
    detail::put_u64(out, step);
    for (std::size_t n = 0; n < g.size(); ++n)
        for (int c = 0; c < 3; ++c) detail::put_u64(out, std::bit_cast<std::uint64_t>(v.at(c, n)));
    return out;
}

inline Checkpoint decode_checkpoint(const std::vector<unsigned char>& in) {
    constexpr std::size_t header = 5 + 6 * 8 + 3 * 8;
    if (in.size() < header || std::memcmp(in.data(), kCheckpointMagic, 5) != 0)
        throw IoError("not a checkpoint file (bad magic)");
    const unsigned char* p = in.data() + 5;
    Index3 lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
        lo[a] = static_cast<std::int64_t>(detail::get_u64(p));
        hi[a] = static_cast<std::int64_t>(detail::get_u64(p + 8));
        p += 16;
    }
    const double h = std::bit_cast<double>(detail::get_u64(p));
    const double t = std::bit_cast<double>(detail::get_u64(p + 8));
    const std::uint64_t step = detail::get_u64(p + 16);
    p += 24;
    GridSpec g;
    try {
        g = GridSpec::from_multiples(lo, hi, h);
    } catch (const ConfigError& e) {
        throw IoError(std::string("checkpoint header: ") + e.what());
    }
    if (in.size() != header + 24 * g.size()) throw IoError("checkpoint payload size does not match its grid");
    Checkpoint ck{SpectralField<double>(g, t), step};
    for (std::size_t n = 0; n < g.size(); ++n)
        for (int c = 0; c < 3; ++c) {
            ck.field.at(c, n) = std::bit_cast<double>(detail::get_u64(p));
            p += 8;
        }
    return ck;
}

inline void write_checkpoint(const std::filesystem::path& path, const SpectralField<double>& v, std::uint64_t step) {
    const auto bytes = encode_checkpoint(v, step);
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open " + tmp + " for writing");
        os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw IoError("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename checkpoint into place: " + ec.message());
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace nsblow
