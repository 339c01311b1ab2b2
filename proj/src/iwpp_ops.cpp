#include "wsiflow/iwpp_ops.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "wsiflow/error.hpp"

namespace wsiflow {

namespace {

IwppOptions engine_options(const WavefrontOptions& o, Connectivity c) {
  return IwppOptions{.workers = o.workers, .connectivity = c, .scan_sweeps = o.scan_sweeps, .order = o.order};
}

void store(IwppStats* out, const IwppStats& s) {
  if (out != nullptr) {
    *out = s;
  }
}

}  // namespace

ImageTile morph_reconstruction(const ImageTile& marker, const ImageTile& mask, const WavefrontOptions& options,
                               IwppStats* stats) {
  if (marker.channels() != 1 || mask.channels() != 1 || marker.kind() != SampleKind::U8 ||
      mask.kind() != SampleKind::U8) {
    throw InvalidArgument("morph_reconstruction expects 1-channel u8 marker and mask");
  }
  if (marker.width() != mask.width() || marker.height() != mask.height()) {
    throw InvalidArgument("morph_reconstruction: marker and mask dimensions differ");
  }
  const auto mk = marker.u8();
  const auto ms = mask.u8();
  for (std::size_t i = 0; i < mk.size(); ++i) {
    if (mk[i] > ms[i]) {
      throw InvalidArgument("morph_reconstruction: marker exceeds mask at pixel " + std::to_string(i));
    }
  }

  Grid<std::uint8_t> grid{marker.width(), marker.height(), std::vector<std::uint8_t>(mk.begin(), mk.end())};
  std::vector<std::size_t> seeds(grid.size());
  std::iota(seeds.begin(), seeds.end(), std::size_t{0});
  store(stats, iwpp_run(grid, seeds, ReconstructionRule{ms}, engine_options(options, options.connectivity)));
  return ImageTile::from_u8(grid.width, grid.height, 1, std::move(grid.cells));
}

BinaryMask fill_holes(const BinaryMask& mask, Connectivity connectivity, const WavefrontOptions& options,
                      IwppStats* stats) {
  const int w = mask.width();
  const int h = mask.height();
  const auto fg = mask.bits();

  std::vector<std::uint8_t> background(fg.size());
  for (std::size_t i = 0; i < fg.size(); ++i) {
    background[i] = fg[i] == 0 ? 1 : 0;
  }

  Grid<std::uint8_t> reached{w, h, std::vector<std::uint8_t>(fg.size(), 0)};
  std::vector<std::size_t> seeds;
  const auto seed = [&](int y, int x) {
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    if (background[i] != 0 && reached.cells[i] == 0) {
      reached.cells[i] = 1;
      seeds.push_back(i);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(0, x);
    seed(h - 1, x);
  }
  for (int y = 0; y < h; ++y) {
    seed(y, 0);
    seed(y, w - 1);
  }

  store(stats, iwpp_run(reached, seeds, FloodRule{background}, engine_options(options, connectivity)));

  std::vector<std::uint8_t> out(fg.size());
  for (std::size_t i = 0; i < fg.size(); ++i) {
    out[i] = (fg[i] != 0 || reached.cells[i] == 0) ? 1 : 0;
  }
  return BinaryMask(w, h, std::move(out));
}

ImageTile distance_transform(const BinaryMask& mask, const WavefrontOptions& options, IwppStats* stats) {
  const int w = mask.width();
  const int h = mask.height();
  const auto fg = mask.bits();
  if (fg.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument("distance_transform: tile too large");
  }

  Grid<std::uint32_t> nearest{w, h, std::vector<std::uint32_t>(fg.size(), 0)};
  std::vector<std::size_t> seeds;
  const auto nbrs = detail::neighbourhood(Connectivity::Eight);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (fg[i] != 0) {
        continue;
      }
      nearest.cells[i] = static_cast<std::uint32_t>(i + 1);
      // Only background pixels touching foreground start a wave.
      for (const auto& o : nbrs) {
        const int qy = y + o.dy;
        const int qx = x + o.dx;
        if (qy >= 0 && qx >= 0 && qy < h && qx < w && fg[static_cast<std::size_t>(qy) * w + qx] != 0) {
          seeds.push_back(i);
          break;
        }
      }
    }
  }
  if (std::all_of(fg.begin(), fg.end(), [](std::uint8_t b) { return b != 0; })) {
    throw InvalidArgument("distance_transform: mask has no background pixel");
  }

  const NearestBackgroundRule rule{w};
  store(stats, iwpp_run(nearest, seeds, rule, engine_options(options, Connectivity::Eight)));

  std::vector<float> out(fg.size(), 0.0f);
  for (std::size_t i = 0; i < fg.size(); ++i) {
    if (fg[i] != 0) {
      const double d2 = static_cast<double>(rule.key(i, nearest.cells[i]) >> 32);
      out[i] = static_cast<float>(std::sqrt(d2));
    }
  }
  return ImageTile::from_f32(w, h, 1, std::move(out));
}

}  // namespace wsiflow
