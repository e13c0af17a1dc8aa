#pragma once

// TZ1 tensor files (all integers little-endian):
//   "TENZ" | u32 version = 1 | u32 order d | d x u64 extents | f64 values, row-major

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "tenspec/tensor.hpp"

namespace tenspec::io {

inline constexpr std::array<char, 4> kTz1Magic{'T', 'E', 'N', 'Z'};
inline constexpr std::uint32_t kTz1Version = 1;

namespace detail {

template <typename U>
void put_le(std::vector<unsigned char>& out, U value) {
    for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<unsigned char>(value >> (8 * b)));
}

template <typename U>
U get_le(const std::vector<unsigned char>& in, std::size_t& pos) {
    if (in.size() - pos < sizeof(U)) throw ParseError("TZ1: unexpected end of data at byte " + std::to_string(pos));
    U value = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) value |= static_cast<U>(in[pos + b]) << (8 * b);
    pos += sizeof(U);
    return value;
}

}  // namespace detail

inline std::vector<unsigned char> encode_tz1(const DenseTensor& t) {
    std::vector<unsigned char> out(kTz1Magic.begin(), kTz1Magic.end());
    out.reserve(12 + 8 * t.order() + 8 * t.size());
    detail::put_le<std::uint32_t>(out, kTz1Version);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.order()));
    for (auto extent : t.shape().dims()) detail::put_le<std::uint64_t>(out, extent);
    for (double v : t.values()) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

inline DenseTensor decode_tz1(const std::vector<unsigned char>& in) {
    if (in.size() < kTz1Magic.size() || std::memcmp(in.data(), kTz1Magic.data(), kTz1Magic.size()) != 0)
        throw ParseError("TZ1: bad magic");
    std::size_t pos = kTz1Magic.size();
    const auto version = detail::get_le<std::uint32_t>(in, pos);
    if (version != kTz1Version) throw ParseError("TZ1: unsupported version " + std::to_string(version));
    const auto order = detail::get_le<std::uint32_t>(in, pos);
    if (order == 0) throw ParseError("TZ1: order must be >= 1");
    if ((in.size() - pos) / 8 < order) throw ParseError("TZ1: truncated extents");
    std::vector<std::size_t> dims(order);
    for (auto& d : dims) {
        const auto extent = detail::get_le<std::uint64_t>(in, pos);
        if (extent > std::numeric_limits<std::size_t>::max()) throw ParseError("TZ1: extent too large");
        d = static_cast<std::size_t>(extent);
    }
    Shape shape;
    try {
        shape = Shape(std::move(dims));
    } catch (const TensorError& e) {
        throw ParseError(std::string("TZ1: ") + e.what());
    }
    const std::size_t remaining = in.size() - pos;
    if (remaining / 8 != shape.element_count() || remaining % 8 != 0)
        throw ParseError("TZ1: expected " + std::to_string(shape.element_count()) + " values, found " +
                         std::to_string(remaining) + " bytes");
    std::vector<double> values(shape.element_count());
    for (auto& v : values) v = std::bit_cast<double>(detail::get_le<std::uint64_t>(in, pos));
    try {
        return DenseTensor(std::move(shape), std::move(values));
    } catch (const TensorError& e) {
        throw ParseError(std::string("TZ1: ") + e.what());
    }
}

inline void write_tz1(const std::filesystem::path& path, const DenseTensor& t) {
    const auto bytes = encode_tz1(t);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw TensorError("cannot open " + path.string() + " for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw TensorError("write failed: " + path.string());
}

inline DenseTensor read_tz1(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    try {
        return decode_tz1(bytes);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace tenspec::io
