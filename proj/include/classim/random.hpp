#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace classim {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

/// Independent random stream derived from a master seed and a stream name.
/// The same (seed, name, index) always yields the same sequence.
inline Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
  const std::uint64_t tag = detail::fnv1a(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

}  // namespace classim
