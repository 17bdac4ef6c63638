#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace fmdp {

/// FNV-1a 64-bit; used for content hashes in manifests and log headers.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);
/// Hash of a file's bytes; throws ValidationError if it cannot be read.
std::uint64_t hash_file(const std::string& path);

/// The one generator used everywhere randomness appears.
using Rng = std::mt19937_64;
inline constexpr const char* kRngName = "mt19937_64";

/// Uniform in [0,1) from the top 53 bits; identical on every platform,
/// unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [lo, hi], portable (rejection sampling on raw bits).
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);

}  // namespace fmdp
