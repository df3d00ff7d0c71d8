#pragma once

// Binary descriptor file ("FVD1"), all integers little-endian:
//
//   offset  size  field
//   0       4     magic "FVD1"
//   4       4     version (u32, currently 1)
//   8       4     N, row count (u32)
//   12      4     D, row length (u32)
//   16      4*N*D payload, IEEE-754 binary32, row-major
//
// The same layout stores encoded vectors (one row per image).

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sfv/core/types.hpp"

namespace sfv::io {

inline constexpr std::array<char, 4> kDescriptorMagic{'F', 'V', 'D', '1'};
inline constexpr std::uint32_t kDescriptorVersion = 1;
inline constexpr std::size_t kDescriptorHeaderBytes = 16;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

}  // namespace detail

// Serializes rows as float32. Values that do not fit in float32 raise DataError.
inline std::vector<std::uint8_t> encode_descriptors(const Matrix& rows) {
  if (rows.rows() < 1 || rows.cols() < 1) throw InputError("descriptor file needs N >= 1 and D >= 1");
  if (static_cast<std::uint64_t>(rows.rows()) > std::numeric_limits<std::uint32_t>::max() ||
      static_cast<std::uint64_t>(rows.cols()) > std::numeric_limits<std::uint32_t>::max())
    throw InputError("descriptor matrix too large for the file format");
  std::vector<std::uint8_t> out;
  out.reserve(kDescriptorHeaderBytes + 4 * static_cast<std::size_t>(rows.size()));
  out.insert(out.end(), kDescriptorMagic.begin(), kDescriptorMagic.end());
  detail::put_u32(out, kDescriptorVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(rows.rows()));
  detail::put_u32(out, static_cast<std::uint32_t>(rows.cols()));
  for (Eigen::Index i = 0; i < rows.size(); ++i) {
    const auto f = static_cast<float>(rows.data()[i]);
    if (!std::isfinite(f))
      throw DataError("value at index " + std::to_string(i) + " is not representable as finite float32",
                      static_cast<std::size_t>(i));
    detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

inline DescriptorSet decode_descriptors(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kDescriptorMagic.data(), 4) != 0)
    throw FormatError("not a descriptor file (bad magic)");
  if (bytes.size() < kDescriptorHeaderBytes)
    throw CorruptionError("descriptor header truncated at byte " + std::to_string(bytes.size()), bytes.size());
  const std::uint32_t version = detail::get_u32(bytes, 4);
  if (version != kDescriptorVersion) throw FormatError("unsupported descriptor file version " + std::to_string(version));
  const std::uint64_t n = detail::get_u32(bytes, 8), d = detail::get_u32(bytes, 12);
  if (n == 0 || d == 0) throw FormatError("descriptor file declares an empty matrix");
  const std::uint64_t expected = kDescriptorHeaderBytes + 4 * n * d;
  if (bytes.size() < expected)
    throw CorruptionError("descriptor payload truncated: file ends at byte " + std::to_string(bytes.size()) +
                              ", expected " + std::to_string(expected),
                          bytes.size());
  if (bytes.size() > expected)
    throw CorruptionError("descriptor file has trailing bytes after offset " + std::to_string(expected),
                          static_cast<std::size_t>(expected));
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::uint64_t i = 0; i < n * d; ++i) {
    const float f = std::bit_cast<float>(detail::get_u32(bytes, kDescriptorHeaderBytes + 4 * i));
    if (!std::isfinite(f))
      throw DataError("non-finite value at element " + std::to_string(i) + " (row " + std::to_string(i / d) +
                          ", col " + std::to_string(i % d) + ")",
                      static_cast<std::size_t>(i));
    m.data()[i] = static_cast<double>(f);
  }
  return DescriptorSet(std::move(m));
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline DescriptorSet read_descriptors(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_descriptors(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const CorruptionError& e) {
    throw CorruptionError(path.string() + ": " + e.what(), e.byte_offset());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what(), e.index());
  }
}

inline void write_descriptors(const std::filesystem::path& path, const Matrix& rows) {
  write_file_bytes(path, encode_descriptors(rows));
}

inline void write_descriptors(const std::filesystem::path& path, const DescriptorSet& set) {
  write_descriptors(path, set.matrix());
}

}  // namespace sfv::io
