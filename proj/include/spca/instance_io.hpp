#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spca/errors.hpp"
#include "spca/model.hpp"

namespace spca {

// ---------------------------------------------------------------------------
// Number formatting
// ---------------------------------------------------------------------------

// Canonical decimal rendering used by every text output: 17 significant
// digits (enough to round-trip any double) in the C locale, with infinities
// spelled "inf"/"-inf".
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// FNV-1a 64-bit hash (config digests)
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : data) {
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

// ---------------------------------------------------------------------------
// Base64 (RFC 4648, with padding)
// ---------------------------------------------------------------------------

namespace detail {
inline constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}
}  // namespace detail

inline std::string base64_encode(const unsigned char* data, std::size_t len) {
  std::string out;
  out.reserve(((len + 2) / 3) * 4);
  std::size_t i = 0;
  for (; i + 3 <= len; i += 3) {
    const std::uint32_t v = (static_cast<std::uint32_t>(data[i]) << 16) |
                            (static_cast<std::uint32_t>(data[i + 1]) << 8) |
                            static_cast<std::uint32_t>(data[i + 2]);
    out.push_back(detail::kB64Alphabet[(v >> 18) & 63]);
    out.push_back(detail::kB64Alphabet[(v >> 12) & 63]);
    out.push_back(detail::kB64Alphabet[(v >> 6) & 63]);
    out.push_back(detail::kB64Alphabet[v & 63]);
  }
  const std::size_t rest = len - i;
  if (rest == 1) {
    const std::uint32_t v = static_cast<std::uint32_t>(data[i]) << 16;
    out.push_back(detail::kB64Alphabet[(v >> 18) & 63]);
    out.push_back(detail::kB64Alphabet[(v >> 12) & 63]);
    out.push_back('=');
    out.push_back('=');
  } else if (rest == 2) {
    const std::uint32_t v = (static_cast<std::uint32_t>(data[i]) << 16) |
                            (static_cast<std::uint32_t>(data[i + 1]) << 8);
    out.push_back(detail::kB64Alphabet[(v >> 18) & 63]);
    out.push_back(detail::kB64Alphabet[(v >> 12) & 63]);
    out.push_back(detail::kB64Alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

inline std::vector<unsigned char> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) {
    throw InvalidParameterError("base64: length must be a multiple of 4");
  }
  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      const char c = text[i + j];
      if (c == '=') {
        // Padding is only legal in the last two positions of the final group.
        if (i + 4 != text.size() || j < 2) {
          throw InvalidParameterError("base64: misplaced padding");
        }
        vals[j] = 0;
        ++pad;
      } else {
        if (pad > 0) throw InvalidParameterError("base64: data after padding");
        vals[j] = detail::b64_value(c);
        if (vals[j] < 0) {
          throw InvalidParameterError("base64: invalid character");
        }
      }
    }
    const std::uint32_t v = (static_cast<std::uint32_t>(vals[0]) << 18) |
                            (static_cast<std::uint32_t>(vals[1]) << 12) |
                            (static_cast<std::uint32_t>(vals[2]) << 6) |
                            static_cast<std::uint32_t>(vals[3]);
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xFF));
    if (pad < 2) out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<unsigned char>(v & 0xFF));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Little-endian double packing
// ---------------------------------------------------------------------------

namespace detail {

inline void pack_f64_le(double v, unsigned char* out) noexcept {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap64(bits);
  }
  std::memcpy(out, &bits, sizeof(bits));
}

inline double unpack_f64_le(const unsigned char* in) noexcept {
  std::uint64_t bits;
  std::memcpy(&bits, in, sizeof(bits));
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap64(bits);
  }
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Instance serialization
// ---------------------------------------------------------------------------

// The noise matrix is stored as its upper triangle (diagonal included) in
// row-major order, packed as little-endian IEEE-754 doubles and then
// base64-encoded.  The observation y is never stored: it is rebuilt from
// (x, lambda, w) on load by the same arithmetic that built it originally,
// which reproduces it bit for bit.
inline nlohmann::json instance_to_json(const Instance& inst) {
  const int n = inst.n;
  const std::size_t tri = static_cast<std::size_t>(n) * (n + 1) / 2;
  std::vector<unsigned char> bytes(tri * 8);
  std::size_t pos = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      detail::pack_f64_le(inst.w(i, j), bytes.data() + pos * 8);
      ++pos;
    }
  }
  nlohmann::json j;
  j["n"] = inst.n;
  j["k"] = inst.k;
  j["lambda"] = inst.lambda;
  j["seed"] = inst.seed;
  j["x"] = inst.x;
  j["w"] = base64_encode(bytes.data(), bytes.size());
  return j;
}

inline Instance instance_from_json(const nlohmann::json& j) {
  for (const char* key : {"n", "k", "lambda", "seed", "x", "w"}) {
    if (!j.contains(key)) {
      throw InvalidParameterError(std::string("instance JSON: missing key '") +
                                  key + "'");
    }
  }
  const int n = j.at("n").get<int>();
  const int k = j.at("k").get<int>();
  if (n <= 0) throw InvalidParameterError("instance JSON: n must be >= 1");
  const double lambda = j.at("lambda").get<double>();
  const std::uint64_t seed = j.at("seed").get<std::uint64_t>();
  SparseSupport x = j.at("x").get<SparseSupport>();
  validate_support(x, n);
  if (static_cast<int>(x.size()) != k) {
    throw InvalidParameterError("instance JSON: |x| != k");
  }
  const std::vector<unsigned char> bytes =
      base64_decode(j.at("w").get<std::string>());
  const std::size_t tri = static_cast<std::size_t>(n) * (n + 1) / 2;
  if (bytes.size() != tri * 8) {
    throw InvalidParameterError("instance JSON: noise payload has wrong size");
  }
  SymmetricMatrix w(n);
  std::size_t pos = 0;
  for (int i = 0; i < n; ++i) {
    for (int j2 = i; j2 < n; ++j2) {
      w.set(i, j2, detail::unpack_f64_le(bytes.data() + pos * 8));
      ++pos;
    }
  }
  return build_observation(n, x, lambda, std::move(w), seed);
}

inline void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << instance_to_json(inst).dump(2) << '\n';
  if (!out) throw Error("write failed: " + path);
}

inline Instance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open for reading: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameterError(std::string("instance JSON parse error: ") +
                                e.what());
  }
  return instance_from_json(j);
}

}  // namespace spca
