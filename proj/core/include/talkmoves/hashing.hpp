#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace talkmoves {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// 64-bit FNV-1a; used for feature hashing where a fast, stable hash is
// needed rather than a cryptographic one.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t basis = 0xcbf29ce484222325ULL) {
  std::uint64_t h = basis;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives an independent stream seed from a run seed and a label.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

}  // namespace talkmoves
