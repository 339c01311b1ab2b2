#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>

#include "wsiflow/image.hpp"
#include "wsiflow/iwpp.hpp"

namespace wsiflow {

struct WavefrontOptions {
  int workers = 1;
  // Raster/anti-raster pairs before switching to the queue phase.
  int scan_sweeps = 2;
  QueueOrder order = QueueOrder::Fifo;
  Connectivity connectivity = Connectivity::Eight;
};

// Grayscale reconstruction by dilation: a value flows from i to j while j is
// below both i's value and j's mask bound.
struct ReconstructionRule {
  using Value = std::uint8_t;
  std::span<const std::uint8_t> mask;

  bool condition(std::size_t, Value src, std::size_t j, Value dst) const noexcept {
    return dst < src && dst < mask[j];
  }
  Value update(std::size_t, Value src, std::size_t j, Value) const noexcept { return std::min(src, mask[j]); }
  bool improves(std::size_t, Value next, Value old) const noexcept { return next > old; }
};

// Binary flood: reached (1) cells spread into unreached (0) cells of the open set.
struct FloodRule {
  using Value = std::uint8_t;
  std::span<const std::uint8_t> open;

  bool condition(std::size_t, Value src, std::size_t j, Value dst) const noexcept {
    return src != 0 && dst == 0 && open[j] != 0;
  }
  Value update(std::size_t, Value, std::size_t, Value) const noexcept { return 1; }
  bool improves(std::size_t, Value next, Value old) const noexcept { return next > old; }
};

// Cells hold 1 + index of their nearest known background pixel (0 = none yet).
// Ordering is by squared distance, then by background index, so the fixpoint
// is canonical even where several background pixels are equidistant.
struct NearestBackgroundRule {
  using Value = std::uint32_t;
  int width = 0;

  static constexpr std::uint64_t kNone = std::numeric_limits<std::uint64_t>::max();

  std::uint64_t key(std::size_t j, Value v) const noexcept {
    if (v == 0) {
      return kNone;
    }
    const auto w = static_cast<std::int64_t>(width);
    const auto b = static_cast<std::int64_t>(v - 1);
    const auto p = static_cast<std::int64_t>(j);
    const std::int64_t dy = p / w - b / w;
    const std::int64_t dx = p % w - b % w;
    // Squared distance in the high bits, background index as tie-break.
    return (static_cast<std::uint64_t>(dy * dy + dx * dx) << 32) | static_cast<std::uint64_t>(b);
  }
  bool condition(std::size_t, Value src, std::size_t j, Value dst) const noexcept {
    return src != 0 && key(j, src) < key(j, dst);
  }
  Value update(std::size_t, Value src, std::size_t, Value) const noexcept { return src; }
  bool improves(std::size_t j, Value next, Value old) const noexcept { return key(j, next) < key(j, old); }
};

/// Reconstruction of `marker` under `mask` (both 1-channel u8, marker <= mask).
ImageTile morph_reconstruction(const ImageTile& marker, const ImageTile& mask, const WavefrontOptions& options = {},
                               IwppStats* stats = nullptr);

/// Background regions not reachable from the tile border under `connectivity`
/// become foreground.
BinaryMask fill_holes(const BinaryMask& mask, Connectivity connectivity = Connectivity::Four,
                      const WavefrontOptions& options = {}, IwppStats* stats = nullptr);

/// Euclidean distance of each foreground pixel to its nearest background pixel
/// (f32, 0 on background), by propagating nearest-background coordinates over
/// the 8-connected grid. Throws InvalidArgument for an all-foreground mask.
ImageTile distance_transform(const BinaryMask& mask, const WavefrontOptions& options = {.scan_sweeps = 0},
                             IwppStats* stats = nullptr);

}  // namespace wsiflow
