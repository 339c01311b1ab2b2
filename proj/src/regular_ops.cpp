#include "wsiflow/regular_ops.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "wsiflow/error.hpp"
#include "wsiflow/parallel.hpp"

namespace wsiflow {

namespace {

void require_channels(const ImageTile& tile, int channels, const char* op) {
  if (tile.channels() != channels) {
    throw InvalidArgument(std::string(op) + " expects a " + std::to_string(channels) + "-channel tile, got " +
                          std::to_string(tile.channels()));
  }
}

double det3(const StainMatrix::Rows& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

std::array<double, 3> normalized(std::array<double, 3> v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw InvalidArgument("stain vector has zero or non-finite length");
  }
  for (auto& x : v) {
    x /= n;
  }
  return v;
}

// Min or max of a 1-channel image over the structuring element, edge-replicated.
template <class T, class Pick>
std::vector<T> neighbourhood_extreme(std::span<const T> src, int width, int height, const StructuringElement& se,
                                     int workers, Pick pick) {
  std::vector<T> out(src.size());
  parallel_blocks(static_cast<std::size_t>(height), workers, [&](std::size_t y0, std::size_t y1) {
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
      for (int x = 0; x < width; ++x) {
        T acc = src[static_cast<std::size_t>(y) * width + x];
        for (const auto& run : se.runs()) {
          const int sy = std::clamp(y + run.dy, 0, height - 1);
          const T* row = src.data() + static_cast<std::size_t>(sy) * width;
          const int lo = x - run.half_width;
          const int hi = x + run.half_width;
          // Clamped columns collapse onto the edge pixel.
          if (lo < 0) {
            acc = pick(acc, row[0]);
          }
          if (hi >= width) {
            acc = pick(acc, row[width - 1]);
          }
          for (int sx = std::max(lo, 0), end = std::min(hi, width - 1); sx <= end; ++sx) {
            acc = pick(acc, row[sx]);
          }
        }
        out[static_cast<std::size_t>(y) * width + x] = acc;
      }
    }
  });
  return out;
}

template <class Pick>
ImageTile extreme_filter(const ImageTile& gray, const StructuringElement& se, int workers, Pick pick) {
  require_channels(gray, 1, "morphology");
  if (gray.kind() == SampleKind::U8) {
    auto out = neighbourhood_extreme<std::uint8_t>(gray.u8(), gray.width(), gray.height(), se, workers, pick);
    return ImageTile::from_u8(gray.width(), gray.height(), 1, std::move(out));
  }
  auto out = neighbourhood_extreme<float>(gray.f32(), gray.width(), gray.height(), se, workers, pick);
  return ImageTile::from_f32(gray.width(), gray.height(), 1, std::move(out));
}

struct PickMin {
  template <class T>
  T operator()(T a, T b) const {
    return b < a ? b : a;
  }
};
struct PickMax {
  template <class T>
  T operator()(T a, T b) const {
    return a < b ? b : a;
  }
};

}  // namespace

StructuringElement StructuringElement::disk(int radius) {
  if (radius < 0) {
    throw InvalidArgument("disk radius must be >= 0");
  }
  StructuringElement se;
  se.radius_ = radius;
  for (int dy = -radius; dy <= radius; ++dy) {
    int half = -1;
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dy * dy + dx * dx <= radius * radius) {
        se.offsets_.push_back({dy, dx});
        half = std::max(half, dx);
      }
    }
    se.runs_.push_back({dy, half});
  }
  return se;
}

StainMatrix StainMatrix::from_rows(const Rows& rows) {
  for (const auto& r : rows) {
    const double n = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
    if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-6) {
      throw InvalidArgument("stain rows must be unit length");
    }
  }
  const double det = det3(rows);
  if (!std::isfinite(det) || std::abs(det) < 1e-9) {
    throw InvalidArgument("stain matrix is singular");
  }
  StainMatrix m;
  m.rows_ = rows;
  const auto& a = rows;
  m.inverse_ = {{{(a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det, (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det,
                  (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det},
                 {(a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det, (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det,
                  (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det},
                 {(a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det, (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det,
                  (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det}}};
  for (const auto& r : m.inverse_) {
    for (double v : r) {
      if (!std::isfinite(v)) {
        throw InvalidArgument("stain matrix is singular");
      }
    }
  }
  return m;
}

StainMatrix StainMatrix::from_unnormalized(const Rows& rows) {
  return from_rows({normalized(rows[0]), normalized(rows[1]), normalized(rows[2])});
}

StainMatrix StainMatrix::hematoxylin_eosin() {
  const auto h = normalized({0.650, 0.704, 0.286});
  const auto e = normalized({0.072, 0.990, 0.105});
  const auto residual = normalized({h[1] * e[2] - h[2] * e[1], h[2] * e[0] - h[0] * e[2], h[0] * e[1] - h[1] * e[0]});
  return from_rows({h, e, residual});
}

StainMatrix StainMatrix::identity() {
  return from_rows({{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}});
}

StainMatrix load_stain_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidArgument("cannot open stain config " + path.string());
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  const nlohmann::json& values = doc.is_object() ? doc.at("stains") : doc;
  if (!values.is_array() || values.size() != 9) {
    throw FormatError(path.string() + ": expected 9 numbers (row-major stain matrix)");
  }
  StainMatrix::Rows rows{};
  for (std::size_t i = 0; i < 9; ++i) {
    if (!values[i].is_number()) {
      throw FormatError(path.string() + ": stain entry " + std::to_string(i) + " is not a number");
    }
    rows[i / 3][i % 3] = values[i].get<double>();
  }
  return StainMatrix::from_unnormalized(rows);
}

ImageTile rgb_to_gray(const ImageTile& rgb, int workers) {
  require_channels(rgb, 3, "rgb_to_gray");
  const auto src = rgb.u8();
  std::vector<std::uint8_t> out(rgb.pixel_count());
  parallel_blocks(out.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      // Weights in thousandths so that halves round up exactly.
      const unsigned luma = 299U * src[3 * i] + 587U * src[3 * i + 1] + 114U * src[3 * i + 2];
      out[i] = static_cast<std::uint8_t>(std::min((luma + 500U) / 1000U, 255U));
    }
  });
  return ImageTile::from_u8(rgb.width(), rgb.height(), 1, std::move(out));
}

ImageTile invert(const ImageTile& gray) {
  require_channels(gray, 1, "invert");
  const auto src = gray.u8();
  std::vector<std::uint8_t> out(src.size());
  std::transform(src.begin(), src.end(), out.begin(), [](std::uint8_t v) { return static_cast<std::uint8_t>(255 - v); });
  return ImageTile::from_u8(gray.width(), gray.height(), 1, std::move(out));
}

ImageTile erode(const ImageTile& gray, const StructuringElement& se, int workers) {
  return extreme_filter(gray, se, workers, PickMin{});
}

ImageTile dilate(const ImageTile& gray, const StructuringElement& se, int workers) {
  return extreme_filter(gray, se, workers, PickMax{});
}

ImageTile morph_open(const ImageTile& gray, const StructuringElement& se, int workers) {
  require_channels(gray, 1, "morph_open");
  if (2 * se.radius() >= std::min(gray.width(), gray.height())) {
    throw InvalidArgument("structuring element radius " + std::to_string(se.radius()) + " too large for " +
                          std::to_string(gray.width()) + "x" + std::to_string(gray.height()) + " tile");
  }
  return dilate(erode(gray, se, workers), se, workers);
}

std::array<ImageTile, 3> color_deconvolution(const ImageTile& rgb, const StainMatrix& stains, int workers) {
  require_channels(rgb, 3, "color_deconvolution");
  const auto src = rgb.u8();
  const auto& inv = stains.inverse();
  const std::size_t n = rgb.pixel_count();

  std::array<double, 256> od_lut{};
  for (int v = 0; v < 256; ++v) {
    od_lut[static_cast<std::size_t>(v)] = -std::log10((v + 1.0) / 256.0);
  }

  std::array<std::vector<float>, 3> planes{std::vector<float>(n), std::vector<float>(n), std::vector<float>(n)};
  parallel_blocks(n, workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double od[3] = {od_lut[src[3 * i]], od_lut[src[3 * i + 1]], od_lut[src[3 * i + 2]]};
      for (std::size_t s = 0; s < 3; ++s) {
        // Row vector OD times column s of the inverse.
        const double c = od[0] * inv[0][s] + od[1] * inv[1][s] + od[2] * inv[2][s];
        planes[s][i] = static_cast<float>(std::max(c, 0.0));
      }
    }
  });
  return {ImageTile::from_f32(rgb.width(), rgb.height(), 1, std::move(planes[0])),
          ImageTile::from_f32(rgb.width(), rgb.height(), 1, std::move(planes[1])),
          ImageTile::from_f32(rgb.width(), rgb.height(), 1, std::move(planes[2]))};
}

SobelResult sobel_gradient(const ImageTile& gray, int workers) {
  require_channels(gray, 1, "sobel_gradient");
  const int w = gray.width();
  const int h = gray.height();
  if (w < 3 || h < 3) {
    throw InvalidArgument("sobel_gradient needs a tile of at least 3x3");
  }
  std::vector<float> src(gray.pixel_count());
  if (gray.kind() == SampleKind::U8) {
    const auto s = gray.u8();
    std::copy(s.begin(), s.end(), src.begin());
  } else {
    const auto s = gray.f32();
    std::copy(s.begin(), s.end(), src.begin());
  }

  std::vector<float> gx(src.size());
  std::vector<float> gy(src.size());
  std::vector<float> mag(src.size());
  parallel_blocks(static_cast<std::size_t>(h), workers, [&](std::size_t y0, std::size_t y1) {
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
      const float* up = src.data() + static_cast<std::size_t>(std::max(y - 1, 0)) * w;
      const float* mid = src.data() + static_cast<std::size_t>(y) * w;
      const float* dn = src.data() + static_cast<std::size_t>(std::min(y + 1, h - 1)) * w;
      for (int x = 0; x < w; ++x) {
        const int l = std::max(x - 1, 0);
        const int r = std::min(x + 1, w - 1);
        const float sx = (up[r] + 2.0f * mid[r] + dn[r]) - (up[l] + 2.0f * mid[l] + dn[l]);
        const float sy = (dn[l] + 2.0f * dn[x] + dn[r]) - (up[l] + 2.0f * up[x] + up[r]);
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        gx[i] = sx;
        gy[i] = sy;
        mag[i] = std::sqrt(sx * sx + sy * sy);
      }
    }
  });
  return {ImageTile::from_f32(w, h, 1, std::move(gx)), ImageTile::from_f32(w, h, 1, std::move(gy)),
          ImageTile::from_f32(w, h, 1, std::move(mag))};
}

}  // namespace wsiflow
