#include "wsiflow/pnm_io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "wsiflow/error.hpp"

namespace wsiflow {

namespace {

static_assert(std::endian::native == std::endian::little, "PFM writer assumes a little-endian host");

class HeaderReader {
 public:
  HeaderReader(const std::string& bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

  std::string magic() {
    if (bytes_.size() < 2) {
      fail("missing magic number");
    }
    pos_ = 2;
    return bytes_.substr(0, 2);
  }

  std::string token() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      ++pos_;
    }
    if (start == pos_) {
      fail("header ended early");
    }
    return bytes_.substr(start, pos_ - start);
  }

  long integer(const char* what) {
    const std::string t = token();
    try {
      std::size_t used = 0;
      const long v = std::stol(t, &used);
      if (used != t.size()) {
        throw std::invalid_argument(t);
      }
      return v;
    } catch (const std::exception&) {
      fail(std::string("bad ") + what + " '" + t + "'");
    }
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      fail("missing separator before raster");
    }
    return pos_ + 1;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(origin_ + ": malformed header: " + msg);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char ch = bytes_[pos_];
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') {
          ++pos_;
        }
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

void check_dims(long w, long h, const HeaderReader& r) {
  if (w < 1 || h < 1 || w > (1L << 20) || h > (1L << 20)) {
    r.fail("dimensions out of range");
  }
}

std::string lower_suffix(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& ch : ext) {
    ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return ext;
}

}  // namespace

ImageTile decode_tile(const std::string& bytes, const std::string& origin) {
  HeaderReader r(bytes, origin);
  const std::string magic = r.magic();

  if (magic == "P5" || magic == "P6") {
    const int channels = magic == "P5" ? 1 : 3;
    const long w = r.integer("width");
    const long h = r.integer("height");
    check_dims(w, h, r);
    const long maxval = r.integer("max-value");
    if (maxval != 255) {
      throw FormatError(origin + ": unsupported max-value " + std::to_string(maxval) + " (only 255)");
    }
    const std::size_t offset = r.payload_offset();
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels;
    if (bytes.size() - std::min(offset, bytes.size()) < need) {
      throw FormatError(origin + ": truncated payload: expected " + std::to_string(need) + " bytes, found " +
                        std::to_string(bytes.size() - std::min(offset, bytes.size())));
    }
    std::vector<std::uint8_t> data(need);
    std::memcpy(data.data(), bytes.data() + offset, need);
    return ImageTile::from_u8(static_cast<int>(w), static_cast<int>(h), channels, std::move(data));
  }

  if (magic == "Pf" || magic == "PF") {
    const int channels = magic == "Pf" ? 1 : 3;
    const long w = r.integer("width");
    const long h = r.integer("height");
    check_dims(w, h, r);
    const std::string scale_tok = r.token();
    double scale = 0.0;
    try {
      scale = std::stod(scale_tok);
    } catch (const std::exception&) {
      r.fail("bad scale '" + scale_tok + "'");
    }
    if (!(scale < 0.0)) {
      throw FormatError(origin + ": big-endian PFM is not supported");
    }
    const std::size_t offset = r.payload_offset();
    const std::size_t row = static_cast<std::size_t>(w) * channels;
    const std::size_t need = row * static_cast<std::size_t>(h) * sizeof(float);
    if (bytes.size() - std::min(offset, bytes.size()) < need) {
      throw FormatError(origin + ": truncated payload: expected " + std::to_string(need) + " bytes");
    }
    std::vector<float> data(row * static_cast<std::size_t>(h));
    for (long y = 0; y < h; ++y) {
      // PFM rasters are stored bottom row first.
      const std::size_t src_row = static_cast<std::size_t>(h - 1 - y);
      std::memcpy(data.data() + static_cast<std::size_t>(y) * row, bytes.data() + offset + src_row * row * sizeof(float),
                  row * sizeof(float));
    }
    try {
      return ImageTile::from_f32(static_cast<int>(w), static_cast<int>(h), channels, std::move(data));
    } catch (const InvalidArgument& e) {
      throw FormatError(origin + ": " + e.what());
    }
  }

  throw FormatError(origin + ": malformed header: unknown magic '" + magic + "'");
}

std::string encode_tile(const ImageTile& tile, const std::string& suffix) {
  std::ostringstream out;
  if (suffix == ".pgm" || suffix == ".ppm") {
    const int want = suffix == ".pgm" ? 1 : 3;
    if (tile.kind() != SampleKind::U8 || tile.channels() != want) {
      throw InvalidArgument(suffix + " needs a " + std::to_string(want) + "-channel u8 tile");
    }
    out << (want == 1 ? "P5" : "P6") << '\n' << tile.width() << ' ' << tile.height() << "\n255\n";
    const auto data = tile.u8();
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    return out.str();
  }
  if (suffix == ".pfm") {
    if (tile.kind() != SampleKind::F32 || (tile.channels() != 1 && tile.channels() != 3)) {
      throw InvalidArgument(".pfm needs a 1- or 3-channel f32 tile");
    }
    out << (tile.channels() == 1 ? "Pf" : "PF") << '\n' << tile.width() << ' ' << tile.height() << "\n-1.0\n";
    const auto data = tile.f32();
    const std::size_t row = static_cast<std::size_t>(tile.width()) * tile.channels();
    for (int y = tile.height() - 1; y >= 0; --y) {
      out.write(reinterpret_cast<const char*>(data.data() + static_cast<std::size_t>(y) * row),
                static_cast<std::streamsize>(row * sizeof(float)));
    }
    return out.str();
  }
  throw InvalidArgument("unsupported tile suffix '" + suffix + "' (use .pgm, .ppm or .pfm)");
}

ImageTile read_tile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open " + path.string());
  }
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tile(bytes, path.string());
}

void write_tile(const ImageTile& tile, const std::filesystem::path& path) {
  const std::string bytes = encode_tile(tile, lower_suffix(path));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error("short write to " + path.string());
  }
}

}  // namespace wsiflow
