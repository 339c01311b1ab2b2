#pragma once

#include <cstdint>
#include <vector>

#include "wsiflow/image.hpp"
#include "wsiflow/iwpp.hpp"

namespace wsiflow {

/// Connected-component labeling with a two-phase union-find.
///
/// Phase one labels horizontal strips independently with plain writes; phase
/// two merges trees across the strip boundaries with concurrent unions. The
/// result is relabeled 1..K in raster order of each component's first pixel,
/// so it does not depend on `strips` or `workers`.
LabelMap connected_components(const BinaryMask& mask, Connectivity connectivity = Connectivity::Eight,
                              int strips = 1, int workers = 1);

/// Pixel count per label; counts[0] stays 0 (background is not counted).
struct AreaHistogram {
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const noexcept;
};

// Accumulated with atomic increments from `workers` threads scanning rows.
AreaHistogram area_histogram(const LabelMap& labels, int workers = 1);

/// Components whose area lies outside [min_area, max_area] become background;
/// the others keep their label. Throws InvalidArgument if min_area > max_area.
LabelMap area_threshold(const LabelMap& labels, std::uint64_t min_area, std::uint64_t max_area, int workers = 1);

}  // namespace wsiflow
