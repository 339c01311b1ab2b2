#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "wsiflow/image.hpp"

namespace wsiflow {

/// Disk-shaped neighbourhood. Offsets are (dy, dx) with dy^2 + dx^2 <= r^2;
/// the set is symmetric about the origin and contains (0, 0).
class StructuringElement {
 public:
  struct Offset {
    int dy;
    int dx;
  };
  // One horizontal run of the disk: all dx in [-half_width, half_width] at row dy.
  struct Run {
    int dy;
    int half_width;
  };

  static StructuringElement disk(int radius);

  int radius() const noexcept { return radius_; }
  const std::vector<Offset>& offsets() const noexcept { return offsets_; }
  const std::vector<Run>& runs() const noexcept { return runs_; }

 private:
  int radius_ = 0;
  std::vector<Offset> offsets_;
  std::vector<Run> runs_;
};

/// Rows are unit optical-density vectors of each stain over (R, G, B).
class StainMatrix {
 public:
  using Rows = std::array<std::array<double, 3>, 3>;

  // Rows must already be unit length (+-1e-6); the matrix must be invertible.
  static StainMatrix from_rows(const Rows& rows);
  // Same, but rows are normalised first.
  static StainMatrix from_unnormalized(const Rows& rows);
  // Haematoxylin, eosin, and their normalised cross product.
  static StainMatrix hematoxylin_eosin();
  static StainMatrix identity();

  const Rows& rows() const noexcept { return rows_; }
  const Rows& inverse() const noexcept { return inverse_; }

 private:
  Rows rows_{};
  Rows inverse_{};
};

// Reads nine numbers, row-major, from a JSON file: either a bare array or
// {"stains": [...]}. Rows are normalised on load.
StainMatrix load_stain_matrix(const std::filesystem::path& path);

// BT.601 luma, rounded and clamped to [0, 255]. Requires a 3-channel u8 tile.
ImageTile rgb_to_gray(const ImageTile& rgb, int workers = 1);

// 255 - v for each sample of a 1-channel u8 tile.
ImageTile invert(const ImageTile& gray);

ImageTile erode(const ImageTile& gray, const StructuringElement& se, int workers = 1);
ImageTile dilate(const ImageTile& gray, const StructuringElement& se, int workers = 1);

// Erosion followed by dilation, both with edge-replicated borders.
// Throws InvalidArgument when the radius is not below min(width, height) / 2.
ImageTile morph_open(const ImageTile& gray, const StructuringElement& se, int workers = 1);

// Per-stain concentration planes (f32, clamped at >= 0), in stain-row order.
// OD_c = -log10((I_c + 1) / 256); concentrations solve OD = c * stains.
std::array<ImageTile, 3> color_deconvolution(const ImageTile& rgb, const StainMatrix& stains, int workers = 1);

struct SobelResult {
  ImageTile gx;
  ImageTile gy;
  ImageTile magnitude;
};

// 3x3 Sobel with edge-replicated borders. Accepts u8 or f32 single-channel input.
SobelResult sobel_gradient(const ImageTile& gray, int workers = 1);

}  // namespace wsiflow
