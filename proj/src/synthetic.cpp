#include "wsiflow/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "wsiflow/error.hpp"

namespace wsiflow {

namespace {

struct Blob {
  double cy;
  double cx;
  double semi_major;
  double semi_minor;
  double angle;
  std::array<int, 3> color;

  bool contains(double y, double x) const {
    const double dy = y - cy;
    const double dx = x - cx;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double u = dx * c + dy * s;
    const double v = -dx * s + dy * c;
    return (u * u) / (semi_major * semi_major) + (v * v) / (semi_minor * semi_minor) <= 1.0;
  }
};

constexpr std::array<int, 3> kBackground{235, 220, 230};
constexpr std::array<int, 3> kNucleus{110, 70, 150};
constexpr int kNoise = 6;          // per-pixel noise amplitude, +-
constexpr int kBlobJitter = 10;    // per-blob colour shift, +-
constexpr double kMinAxis = 8.0;
constexpr double kMaxAxis = 12.0;
constexpr double kGap = 3.0;       // minimum empty pixels between blob bounding circles
constexpr int kPlacementAttempts = 2000;

}  // namespace

ImageTile make_synthetic_tile(int width, int height, int object_count, std::uint64_t seed) {
  if (width < 8 || height < 8) {
    throw InvalidArgument("synthetic tile must be at least 8x8, got " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
  if (object_count < 0) {
    throw InvalidArgument("object_count must be >= 0");
  }

  std::mt19937_64 rng(seed);
  std::vector<Blob> blobs;
  blobs.reserve(static_cast<std::size_t>(object_count));
  for (int i = 0; i < object_count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      Blob b{};
      b.semi_major = kMinAxis + draw_unit(rng) * (kMaxAxis - kMinAxis);
      b.semi_minor = kMinAxis + draw_unit(rng) * (b.semi_major - kMinAxis);
      b.angle = draw_unit(rng) * std::numbers::pi;
      const double r = b.semi_major;
      const double lo_y = r + 1.0;
      const double lo_x = r + 1.0;
      const double hi_y = height - r - 2.0;
      const double hi_x = width - r - 2.0;
      if (hi_y < lo_y || hi_x < lo_x) {
        continue;
      }
      b.cy = lo_y + draw_unit(rng) * (hi_y - lo_y);
      b.cx = lo_x + draw_unit(rng) * (hi_x - lo_x);
      const bool clear = std::none_of(blobs.begin(), blobs.end(), [&](const Blob& o) {
        return std::hypot(o.cy - b.cy, o.cx - b.cx) < o.semi_major + b.semi_major + kGap;
      });
      if (!clear) {
        continue;
      }
      for (std::size_t c = 0; c < 3; ++c) {
        b.color[c] = kNucleus[c] + static_cast<int>(draw_below(rng, 2 * kBlobJitter + 1)) - kBlobJitter;
      }
      blobs.push_back(b);
      placed = true;
    }
    if (!placed) {
      throw InvalidArgument("cannot place " + std::to_string(object_count) + " disjoint objects in a " +
                            std::to_string(width) + "x" + std::to_string(height) + " tile");
    }
  }

  std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::array<int, 3>* base = &kBackground;
      for (const auto& b : blobs) {
        if (b.contains(y, x)) {
          base = &b.color;
          break;
        }
      }
      const std::size_t off = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + x) * 3;
      for (std::size_t c = 0; c < 3; ++c) {
        const int noise = object_count == 0 ? 0 : static_cast<int>(draw_below(rng, 2 * kNoise + 1)) - kNoise;
        data[off + c] = static_cast<std::uint8_t>(std::clamp((*base)[c] + noise, 0, 255));
      }
    }
  }
  return ImageTile::from_u8(width, height, 3, std::move(data));
}

}  // namespace wsiflow
