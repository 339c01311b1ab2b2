#include "wsiflow/labeling.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <string>

#include "wsiflow/error.hpp"
#include "wsiflow/parallel.hpp"
#include "wsiflow/union_find.hpp"

namespace wsiflow {

LabelMap connected_components(const BinaryMask& mask, Connectivity connectivity, int strips, int workers) {
  if (strips < 1) {
    throw InvalidArgument("connected_components: strip count must be >= 1");
  }
  const int w = mask.width();
  const int h = mask.height();
  const auto fg = mask.bits();
  const auto at = [w](int y, int x) { return static_cast<std::size_t>(y) * w + x; };
  const bool eight = connectivity == Connectivity::Eight;

  const int bands = std::min(strips, h);
  const auto band_start = [&](int b) { return static_cast<int>(static_cast<long>(h) * b / bands); };

  UnionFind forest(fg.size());

  // Phase 1: each strip touches only its own rows.
  parallel_items(static_cast<std::size_t>(bands), workers, [&](std::size_t band) {
    const int y0 = band_start(static_cast<int>(band));
    const int y1 = band_start(static_cast<int>(band) + 1);
    for (int y = y0; y < y1; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = at(y, x);
        if (fg[p] == 0) {
          continue;
        }
        if (x > 0 && fg[p - 1] != 0) {
          forest.unite_exclusive(p, p - 1);
        }
        if (y > y0) {
          for (int dx = eight ? -1 : 0; dx <= (eight ? 1 : 0); ++dx) {
            const int nx = x + dx;
            if (nx >= 0 && nx < w && fg[at(y - 1, nx)] != 0) {
              forest.unite_exclusive(p, at(y - 1, nx));
            }
          }
        }
      }
    }
  });

  // Phase 2: stitch each strip's first row to the row above it.
  if (bands > 1) {
    parallel_items(static_cast<std::size_t>(bands - 1), workers, [&](std::size_t k) {
      const int y = band_start(static_cast<int>(k) + 1);
      for (int x = 0; x < w; ++x) {
        const std::size_t p = at(y, x);
        if (fg[p] == 0) {
          continue;
        }
        for (int dx = eight ? -1 : 0; dx <= (eight ? 1 : 0); ++dx) {
          const int nx = x + dx;
          if (nx >= 0 && nx < w && fg[at(y - 1, nx)] != 0) {
            forest.unite(p, at(y - 1, nx));
          }
        }
      }
    });
  }

  forest.flatten();

  // Roots are the smallest index of their component, i.e. its first pixel in
  // raster order, so a single ascending pass yields the canonical labels.
  LabelMap out(w, h);
  auto labels = out.labels();
  LabelMap::Label next = 0;
  for (std::size_t p = 0; p < fg.size(); ++p) {
    if (fg[p] == 0) {
      continue;
    }
    const auto root = forest.parent(p);
    labels[p] = root == p ? ++next : labels[root];
  }
  return out;
}

std::uint64_t AreaHistogram::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

AreaHistogram area_histogram(const LabelMap& labels, int workers) {
  const auto src = labels.labels();
  AreaHistogram hist;
  hist.counts.assign(static_cast<std::size_t>(labels.max_label()) + 1, 0);
  parallel_blocks(src.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      if (src[i] != 0) {
        std::atomic_ref<std::uint64_t>(hist.counts[src[i]]).fetch_add(1, std::memory_order_relaxed);
      }
    }
  });
  return hist;
}

LabelMap area_threshold(const LabelMap& labels, std::uint64_t min_area, std::uint64_t max_area, int workers) {
  if (min_area > max_area) {
    throw InvalidArgument("area_threshold: min_area " + std::to_string(min_area) + " exceeds max_area " +
                          std::to_string(max_area));
  }
  const AreaHistogram hist = area_histogram(labels, workers);
  const auto src = labels.labels();
  std::vector<LabelMap::Label> out(src.size());
  parallel_blocks(src.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto area = hist.counts[src[i]];
      out[i] = (src[i] != 0 && area >= min_area && area <= max_area) ? src[i] : 0;
    }
  });
  return LabelMap(labels.width(), labels.height(), std::move(out));
}

}  // namespace wsiflow
