#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace icesel {

// FNV-1a, 64 bit. Used for index cache keys and report config hashes.
inline std::uint64_t fnv1a64(std::string_view data,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t value);

// Hashes a whole file; throws ConfigError if it cannot be read.
std::uint64_t hash_file(const std::string& path);

}  // namespace icesel
