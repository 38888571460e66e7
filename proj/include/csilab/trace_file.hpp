#pragma once

// Binary trace container.
//
// Layout (all integers and floats little-endian):
//
//   offset size  field
//        0    4  magic "CSTF"
//        4    2  version (u16, = 1)
//        6    2  channel count (u16, = 4)
//        8    4  sets (u32)
//       12    8  samples per set (u64)
//       20    8  sample rate, Hz (f64)
//       28    2  ADC bits (u16)
//       30    8  full scale (f64)
//       38   32  DC means p1, p2, c1, c2 (4 x f64)
//       70    8  RNG seed (u64)
//       78    4  CRC-32 of bytes [0, 78)
//       82       payload: per set, per channel, samples x i16
//
// Files are written to a temporary sibling and renamed into place.

#include "csilab/errors.hpp"
#include "csilab/synth.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace csilab::io {

inline constexpr std::array<char, 4> kMagic{'C', 'S', 'T', 'F'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderFields = 78;
inline constexpr std::size_t kHeaderSize = kHeaderFields + 4;

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_floating_point_v<T>) {
    static_assert(sizeof(T) == 8);
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

template <typename T>
T get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  if constexpr (std::is_floating_point_v<T>)
    return std::bit_cast<T>(bits);
  else
    return static_cast<T>(bits);
}

inline std::uint32_t crc32_of(const unsigned char* data, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

} // namespace detail

// Writes `bytes` to `path` through a uniquely named temporary file in the
// same directory followed by a rename; on failure nothing is left behind.
inline void atomic_write(const std::filesystem::path& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  std::random_device rd;
  const fs::path tmp = path.string() + ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for '" + path.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot move output into place at '" + path.string() + "': " + ec.message());
  }
}

inline std::vector<unsigned char> encode_header(const synth::TraceSet& ts) {
  const auto& acq = ts.acquisition();
  if (acq.num_sets > UINT32_MAX) throw DomainError("too many sets for the trace format");
  std::vector<unsigned char> h;
  h.reserve(kHeaderSize);
  h.insert(h.end(), kMagic.begin(), kMagic.end());
  detail::put_le<std::uint16_t>(h, kVersion);
  detail::put_le<std::uint16_t>(h, synth::kChannels);
  detail::put_le<std::uint32_t>(h, static_cast<std::uint32_t>(acq.num_sets));
  detail::put_le<std::uint64_t>(h, acq.samples_per_set);
  detail::put_le<double>(h, acq.sample_rate);
  detail::put_le<std::uint16_t>(h, static_cast<std::uint16_t>(acq.adc_bits));
  detail::put_le<double>(h, acq.full_scale);
  for (double d : ts.dc_means()) detail::put_le<double>(h, d);
  detail::put_le<std::uint64_t>(h, acq.rng_seed);
  detail::put_le<std::uint32_t>(h, detail::crc32_of(h.data(), kHeaderFields));
  return h;
}

inline std::string encode(const synth::TraceSet& ts) {
  const auto header = encode_header(ts);
  const auto payload = ts.payload();
  std::string bytes(header.begin(), header.end());
  bytes.reserve(kHeaderSize + payload.size() * 2);
  for (std::int16_t c : payload) {
    const auto u = static_cast<std::uint16_t>(c);
    bytes.push_back(static_cast<char>(u & 0xff));
    bytes.push_back(static_cast<char>(u >> 8));
  }
  return bytes;
}

inline void write_trace_file(const std::filesystem::path& path, const synth::TraceSet& ts) {
  atomic_write(path, encode(ts));
}

inline synth::TraceSet decode(std::string_view bytes) {
  if (bytes.size() < kHeaderSize) throw FormatError("file shorter than the trace header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (std::memcmp(p, kMagic.data(), kMagic.size()) != 0) throw FormatError("bad magic");
  if (detail::get_le<std::uint32_t>(p + kHeaderFields) != detail::crc32_of(p, kHeaderFields))
    throw FormatError("header checksum mismatch");
  if (detail::get_le<std::uint16_t>(p + 4) != kVersion) throw FormatError("unsupported version");
  if (detail::get_le<std::uint16_t>(p + 6) != synth::kChannels) throw FormatError("channel count must be 4");
  synth::AcquisitionConfig acq;
  acq.num_sets = detail::get_le<std::uint32_t>(p + 8);
  acq.samples_per_set = detail::get_le<std::uint64_t>(p + 12);
  acq.sample_rate = detail::get_le<double>(p + 20);
  acq.adc_bits = detail::get_le<std::uint16_t>(p + 28);
  acq.full_scale = detail::get_le<double>(p + 30);
  std::array<double, synth::kChannels> dc{};
  for (std::size_t i = 0; i < dc.size(); ++i) dc[i] = detail::get_le<double>(p + 38 + 8 * i);
  acq.rng_seed = detail::get_le<std::uint64_t>(p + 70);
  if (acq.num_sets == 0 || acq.samples_per_set == 0) throw FormatError("empty trace set");
  if (!(acq.sample_rate > 0.0)) throw FormatError("sample rate must be > 0");
  if (acq.adc_bits < 2 || acq.adc_bits > 16) throw FormatError("ADC bits out of range");
  if (!(acq.full_scale > 0.0)) throw FormatError("full scale must be > 0");
  const std::uint64_t codes = static_cast<std::uint64_t>(acq.num_sets) * synth::kChannels;
  if (acq.samples_per_set > (UINT64_MAX / 2) / codes) throw FormatError("payload size overflows");
  const std::uint64_t expected = codes * acq.samples_per_set * 2;
  if (bytes.size() - kHeaderSize != expected)
    throw FormatError(bytes.size() - kHeaderSize < expected ? "payload truncated" : "trailing bytes after payload");
  synth::TraceSet ts(acq, dc, "external");
  auto out = ts.payload();
  const unsigned char* q = p + kHeaderSize;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(q[2 * i] | (q[2 * i + 1] << 8)));
  return ts;
}

inline synth::TraceSet read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return decode(bytes);
}

} // namespace csilab::io
