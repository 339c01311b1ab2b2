#pragma once

#include <filesystem>
#include <string>

#include "wsiflow/image.hpp"

namespace wsiflow {

// Tile file I/O in the portable anymap family:
//   P5 (.pgm)  1-channel u8
//   P6 (.ppm)  3-channel u8
//   Pf / PF (.pfm)  1- or 3-channel f32, little-endian, bottom row first
// Only a max-value of 255 is accepted for the 8-bit variants.
ImageTile read_tile(const std::filesystem::path& path);
void write_tile(const ImageTile& tile, const std::filesystem::path& path);

// In-memory variants used by the file functions; `origin` names the source in errors.
ImageTile decode_tile(const std::string& bytes, const std::string& origin = "<memory>");
std::string encode_tile(const ImageTile& tile, const std::string& suffix);

}  // namespace wsiflow
