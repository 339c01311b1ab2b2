#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace wsiflow {

enum class SampleKind : std::uint8_t { U8, F32 };

/// Immutable row-major pixel grid with interleaved channels.
///
/// Kernels never modify a tile in place; they allocate a new one for their
/// output, so a tile can be shared freely between threads.
class ImageTile {
 public:
  static ImageTile from_u8(int width, int height, int channels, std::vector<std::uint8_t> data);
  static ImageTile from_f32(int width, int height, int channels, std::vector<float> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  SampleKind kind() const noexcept;
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  std::span<const std::uint8_t> u8() const;
  std::span<const float> f32() const;

  std::uint8_t u8_at(int x, int y, int c = 0) const {
    return u8()[index(x, y, c)];
  }
  float f32_at(int x, int y, int c = 0) const {
    return f32()[index(x, y, c)];
  }
  // Sample widened to double regardless of kind.
  double value(int x, int y, int c = 0) const;

  friend bool operator==(const ImageTile&, const ImageTile&) = default;

 private:
  ImageTile(int width, int height, int channels, std::variant<std::vector<std::uint8_t>, std::vector<float>> data);

  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::variant<std::vector<std::uint8_t>, std::vector<float>> data_;
};

/// Per-pixel foreground (1) / background (0) flags.
class BinaryMask {
 public:
  BinaryMask(int width, int height);
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return bits_.size(); }

  bool at(int x, int y) const noexcept { return bits_[offset(x, y)] != 0; }
  void set(int x, int y, bool fg) noexcept { bits_[offset(x, y)] = fg ? 1 : 0; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::span<std::uint8_t> bits() noexcept { return bits_; }
  std::size_t foreground_count() const noexcept;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

/// Per-pixel component id, 0 for background.
class LabelMap {
 public:
  using Label = std::uint32_t;

  LabelMap(int width, int height);
  LabelMap(int width, int height, std::vector<Label> labels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return labels_.size(); }

  Label at(int x, int y) const noexcept { return labels_[offset(x, y)]; }
  void set(int x, int y, Label v) noexcept { labels_[offset(x, y)] = v; }
  std::span<const Label> labels() const noexcept { return labels_; }
  std::span<Label> labels() noexcept { return labels_; }
  Label max_label() const noexcept;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<Label> labels_;
};

// Foreground where the single-channel tile's sample >= threshold.
BinaryMask threshold_mask(const ImageTile& gray, double threshold);

// Foreground where the label is nonzero.
BinaryMask mask_from_labels(const LabelMap& labels);

}  // namespace wsiflow
