#pragma once

// Binary vector container:
//   bytes 0..3   magic "ZGV1"
//   bytes 4..7   u32 little-endian element count N
//   bytes 8..15  reserved, written as zero
//   then N little-endian IEEE-754 binary32 values.

#include "zoa/core.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace zoa::io {

inline constexpr std::array<char, 4> kZgvMagic{'Z', 'G', 'V', '1'};
inline constexpr std::size_t kZgvHeaderSize = 16;

namespace detail {
inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<unsigned char>((v >> (8 * k)) & 0xFFu));
}
inline std::uint32_t get_u32(std::span<const unsigned char> in) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(in[k]) << (8 * k);
  return v;
}
} // namespace detail

inline std::vector<unsigned char> encode_zgv(const Vec& v) {
  if (v.size() > static_cast<Eigen::Index>(std::numeric_limits<std::uint32_t>::max()))
    throw Error("vector too long for container");
  std::vector<unsigned char> out;
  out.reserve(kZgvHeaderSize + 4 * static_cast<std::size_t>(v.size()));
  out.insert(out.end(), kZgvMagic.begin(), kZgvMagic.end());
  detail::put_u32(out, static_cast<std::uint32_t>(v.size()));
  detail::put_u32(out, 0);
  detail::put_u32(out, 0);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto f = static_cast<float>(v[i]);
    detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

inline Vec decode_zgv(std::span<const unsigned char> bytes) {
  if (bytes.size() < kZgvHeaderSize || std::memcmp(bytes.data(), kZgvMagic.data(), 4) != 0)
    throw Error("not a ZGV1 container");
  const std::uint32_t n = detail::get_u32(bytes.subspan(4, 4));
  if (bytes.size() != kZgvHeaderSize + 4 * static_cast<std::size_t>(n))
    throw Error("ZGV1 payload length mismatch");
  Vec v(n);
  for (std::uint32_t i = 0; i < n; ++i)
    v[i] = std::bit_cast<float>(detail::get_u32(bytes.subspan(kZgvHeaderSize + 4 * i, 4)));
  return v;
}

inline void write_zgv(const std::string& path, const Vec& v) {
  const auto bytes = encode_zgv(v);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write failed: " + path);
}

inline Vec read_zgv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_zgv(bytes);
}

} // namespace zoa::io
