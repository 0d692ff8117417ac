#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace chessrl {

/// splitmix64 finalizer over (a, b); derives independent seeds for
/// per-item RNG streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// FNV-1a, for seeding from identifiers.
std::uint64_t hash_string(std::string_view text);

/// Uniform double in [0, 1) from the top 53 bits; portable across standard
/// libraries, unlike std::uniform_real_distribution.
double unit_uniform(std::mt19937_64& rng);

/// Uniform index in [0, n). n must be positive.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

}  // namespace chessrl
