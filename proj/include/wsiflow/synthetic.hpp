#pragma once

#include <cstdint>
#include <random>

#include "wsiflow/image.hpp"

namespace wsiflow {

// Bounded integer drawn from a 64-bit Mersenne twister without going through
// std::uniform_int_distribution, whose output differs between standard libraries.
inline std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
  return bound == 0 ? 0 : rng() % bound;
}

inline double draw_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Three-channel u8 tile with `object_count` disjoint dark elliptical blobs
/// (nuclei-like hematoxylin colour) on a light eosin-like background with
/// per-pixel noise. Deterministic in `seed`.
///
/// Blob semi-axes lie in [8, 12] pixels, so every blob survives an opening
/// with the default radius-6 disk. Throws InvalidArgument when the tile is
/// smaller than 8x8 or the blobs cannot be packed without touching.
ImageTile make_synthetic_tile(int width, int height, int object_count, std::uint64_t seed);

}  // namespace wsiflow
