#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pprhub/common.hpp"

namespace pprhub {

// ---- little-endian binary primitives -------------------------------------

namespace detail {

template <typename T>
inline T byteswap_integral(T v) {
  T out{};
  auto* src = reinterpret_cast<const unsigned char*>(&v);
  auto* dst = reinterpret_cast<unsigned char*>(&out);
  for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = src[sizeof(T) - 1 - i];
  return out;
}

template <typename T>
inline T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return byteswap_integral(v);
}

}  // namespace detail

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& os) : os_(os) {}

  void bytes(const void* data, std::size_t len) {
    os_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    require(os_.good(), "binary write failed");
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { v = detail::to_little(v); bytes(&v, 4); }
  void u64(std::uint64_t v) { v = detail::to_little(v); bytes(&v, 8); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  template <typename T, typename Fn>
  void array(const std::vector<T>& xs, Fn&& write_one) {
    for (const T& x : xs) write_one(x);
  }

 private:
  std::ostream& os_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& is) : is_(is) {}

  void bytes(void* data, std::size_t len) {
    is_.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    require(is_.gcount() == static_cast<std::streamsize>(len),
            "binary read failed (truncated file?)");
  }
  std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return detail::to_little(v); }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return detail::to_little(v); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

 private:
  std::istream& is_;
};

// ---- atomic file write ----------------------------------------------------

/// Writes via a temporary file in the same directory, then renames into
/// place, so readers never observe a partially written file.
template <typename Fn>
inline void atomic_write_file(const std::string& path, Fn&& fill, bool binary = false) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, binary ? (std::ios::out | std::ios::binary) : std::ios::out);
    require(os.is_open(), "cannot open for writing: " + tmp);
    fill(os);
    os.flush();
    require(os.good(), "write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, "rename failed: " + tmp + " -> " + path);
}

// ---- provenance -----------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

/// Stable shortest-roundtrip-ish formatting for CSV output.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

struct Provenance {
  std::string config_hash;  // hex of fnv1a64 over the canonical config text
  std::uint64_t seed = 0;
  std::string version = kVersion;

  static Provenance from_config_text(std::string_view canonical, std::uint64_t seed) {
    Provenance p;
    p.config_hash = hex64(fnv1a64(canonical));
    p.seed = seed;
    return p;
  }
};

/// Leading "# key=value" comment lines carried by every CSV artifact.
inline void write_csv_provenance(std::ostream& os, const Provenance& p,
                                 const std::map<std::string, std::string>& extra = {}) {
  os << "# pprhub_version=" << p.version << "\n";
  os << "# config_hash=" << p.config_hash << "\n";
  os << "# seed=" << p.seed << "\n";
  for (const auto& [k, v] : extra) os << "# " << k << "=" << v << "\n";
}

}  // namespace pprhub
