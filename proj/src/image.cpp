#include "wsiflow/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wsiflow/error.hpp"

namespace wsiflow {

namespace {

void check_shape(int width, int height, int channels, std::size_t length) {
  if (width < 1 || height < 1) {
    throw InvalidArgument("tile dimensions must be >= 1, got " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
  if (channels < 1) {
    throw InvalidArgument("tile must have at least one channel");
  }
  const auto expected =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * static_cast<std::size_t>(channels);
  if (length != expected) {
    throw InvalidArgument("tile data length " + std::to_string(length) + " does not match " +
                          std::to_string(expected));
  }
}

void check_plane(int width, int height, std::size_t length) {
  if (width < 1 || height < 1) {
    throw InvalidArgument("plane dimensions must be >= 1");
  }
  if (length != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw InvalidArgument("plane data length does not match dimensions");
  }
}

}  // namespace

ImageTile::ImageTile(int width, int height, int channels,
                     std::variant<std::vector<std::uint8_t>, std::vector<float>> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {}

ImageTile ImageTile::from_u8(int width, int height, int channels, std::vector<std::uint8_t> data) {
  check_shape(width, height, channels, data.size());
  return ImageTile(width, height, channels, std::move(data));
}

ImageTile ImageTile::from_f32(int width, int height, int channels, std::vector<float> data) {
  check_shape(width, height, channels, data.size());
  if (!std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); })) {
    throw InvalidArgument("f32 tile contains a non-finite sample");
  }
  return ImageTile(width, height, channels, std::move(data));
}

SampleKind ImageTile::kind() const noexcept {
  return std::holds_alternative<std::vector<std::uint8_t>>(data_) ? SampleKind::U8 : SampleKind::F32;
}

std::span<const std::uint8_t> ImageTile::u8() const {
  const auto* v = std::get_if<std::vector<std::uint8_t>>(&data_);
  if (v == nullptr) {
    throw InvalidArgument("tile holds f32 samples, u8 requested");
  }
  return *v;
}

std::span<const float> ImageTile::f32() const {
  const auto* v = std::get_if<std::vector<float>>(&data_);
  if (v == nullptr) {
    throw InvalidArgument("tile holds u8 samples, f32 requested");
  }
  return *v;
}

double ImageTile::value(int x, int y, int c) const {
  return kind() == SampleKind::U8 ? static_cast<double>(u8_at(x, y, c)) : static_cast<double>(f32_at(x, y, c));
}

BinaryMask::BinaryMask(int width, int height)
    : BinaryMask(width, height,
                 std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                           static_cast<std::size_t>(std::max(height, 0)))) {}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  check_plane(width, height, bits_.size());
  for (auto& b : bits_) {
    b = b != 0 ? 1 : 0;
  }
}

std::size_t BinaryMask::foreground_count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

LabelMap::LabelMap(int width, int height)
    : LabelMap(width, height,
               std::vector<Label>(static_cast<std::size_t>(std::max(width, 0)) *
                                  static_cast<std::size_t>(std::max(height, 0)))) {}

LabelMap::LabelMap(int width, int height, std::vector<Label> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
  check_plane(width, height, labels_.size());
}

LabelMap::Label LabelMap::max_label() const noexcept {
  return labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end());
}

BinaryMask threshold_mask(const ImageTile& gray, double threshold) {
  if (gray.channels() != 1) {
    throw InvalidArgument("threshold_mask expects a single-channel tile");
  }
  BinaryMask out(gray.width(), gray.height());
  auto bits = out.bits();
  if (gray.kind() == SampleKind::U8) {
    const auto src = gray.u8();
    for (std::size_t i = 0; i < src.size(); ++i) {
      bits[i] = static_cast<double>(src[i]) >= threshold ? 1 : 0;
    }
  } else {
    const auto src = gray.f32();
    for (std::size_t i = 0; i < src.size(); ++i) {
      bits[i] = static_cast<double>(src[i]) >= threshold ? 1 : 0;
    }
  }
  return out;
}

BinaryMask mask_from_labels(const LabelMap& labels) {
  BinaryMask out(labels.width(), labels.height());
  auto bits = out.bits();
  const auto src = labels.labels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    bits[i] = src[i] != 0 ? 1 : 0;
  }
  return out;
}

}  // namespace wsiflow
