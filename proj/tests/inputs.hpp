#pragma once

// Random test inputs and conversions between library and oracle types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "wsiflow/features.hpp"
#include "wsiflow/image.hpp"
#include "wsiflow/synthetic.hpp"

namespace testing_inputs {

using wsiflow::BinaryMask;
using wsiflow::ImageTile;
using wsiflow::LabelMap;

inline int pick(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(wsiflow::draw_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

// Gray tile of one of three kinds: white noise, a few flat rectangles on
// noise, or a smooth ramp with dark spots.
inline ImageTile random_gray(std::mt19937_64& rng, int w, int h) {
  std::vector<std::uint8_t> v(static_cast<std::size_t>(w) * h);
  const int kind = pick(rng, 0, 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int s = 0;
      if (kind == 0) {
        s = pick(rng, 0, 255);
      } else if (kind == 1) {
        s = pick(rng, 0, 40);
      } else {
        s = (x * 255) / std::max(w - 1, 1) / 2 + (y * 255) / std::max(h - 1, 1) / 2;
      }
      v[static_cast<std::size_t>(y) * w + x] = static_cast<std::uint8_t>(s);
    }
  }
  if (kind != 0) {
    const int shapes = pick(rng, 1, 8);
    for (int k = 0; k < shapes; ++k) {
      const int x0 = pick(rng, 0, w - 1);
      const int y0 = pick(rng, 0, h - 1);
      const int x1 = std::min(w - 1, x0 + pick(rng, 0, w / 2));
      const int y1 = std::min(h - 1, y0 + pick(rng, 0, h / 2));
      const int level = pick(rng, 0, 255);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          v[static_cast<std::size_t>(y) * w + x] = static_cast<std::uint8_t>(level);
        }
      }
    }
  }
  return ImageTile::from_u8(w, h, 1, std::move(v));
}

inline ImageTile random_rgb(std::mt19937_64& rng, int w, int h) {
  // Blobs need about 25 pixels of room in each direction.
  if (std::min(w, h) >= 32 && pick(rng, 0, 1) == 0) {
    return wsiflow::make_synthetic_tile(w, h, pick(rng, 0, 1), rng());
  }
  std::vector<std::uint8_t> v(static_cast<std::size_t>(w) * h * 3);
  for (auto& s : v) {
    s = static_cast<std::uint8_t>(pick(rng, 0, 255));
  }
  return ImageTile::from_u8(w, h, 3, std::move(v));
}

// Random mask: independent pixels, or random rectangles and rings (which
// produce holes and touching components).
inline BinaryMask random_mask(std::mt19937_64& rng, int w, int h) {
  BinaryMask m(w, h);
  const int kind = pick(rng, 0, 2);
  if (kind == 0) {
    const int density = pick(rng, 5, 70);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        m.set(x, y, pick(rng, 0, 99) < density);
      }
    }
    return m;
  }
  const int shapes = pick(rng, 1, 10);
  for (int k = 0; k < shapes; ++k) {
    const int cx = pick(rng, 0, w - 1);
    const int cy = pick(rng, 0, h - 1);
    const int r = pick(rng, 2, std::min(w, h) / 3);
    const int thickness = kind == 2 ? pick(rng, 1, 3) : r + 1;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        if (d2 <= r * r && d2 >= (r - thickness) * (r - thickness)) {
          m.set(x, y, true);
        }
      }
    }
  }
  return m;
}

inline oracle::Gray to_oracle(const ImageTile& t) {
  oracle::Gray g{t.width(), t.height(), {}};
  for (auto s : t.u8()) {
    g.v.push_back(s);
  }
  return g;
}

inline oracle::Mask to_oracle(const BinaryMask& m) {
  oracle::Mask o{m.width(), m.height(), {}};
  for (auto b : m.bits()) {
    o.v.push_back(b != 0 ? 1 : 0);
  }
  return o;
}

inline oracle::Labels to_oracle(const LabelMap& l) {
  return {l.width(), l.height(), std::vector<std::uint32_t>(l.labels().begin(), l.labels().end())};
}

inline std::vector<double> plane(const ImageTile& t) {
  std::vector<double> out;
  out.reserve(t.pixel_count());
  for (int y = 0; y < t.height(); ++y) {
    for (int x = 0; x < t.width(); ++x) {
      out.push_back(t.value(x, y));
    }
  }
  return out;
}

inline bool close(double got, double want, double rel = 1e-6, double abs = 1e-6) {
  return std::abs(got - want) <= abs + rel * std::abs(want);
}

inline bool close(const oracle::Stats& want, const wsiflow::Statistics& got) {
  return close(got.mean, want.mean) && close(got.median, want.median) && close(got.min, want.min) &&
         close(got.max, want.max) && close(got.stddev, want.stddev);
}

}  // namespace testing_inputs
