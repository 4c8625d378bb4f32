#include <fstream>

#include "sarcaps/binary_io.hpp"
#include "sarcaps/data.hpp"

namespace sarcaps::data {

namespace {
constexpr std::uint16_t kTileVersion = 1;
}

void write_tile(const std::filesystem::path& path, const Tile& tile) {
  if (tile.height == 0 || tile.width == 0 || tile.height > 0xFFFF || tile.width > 0xFFFF) {
    throw std::invalid_argument("write_tile: tile dimensions must be in [1, 65535]");
  }
  if (tile.pixels.size() != tile.height * tile.width) {
    throw std::invalid_argument("write_tile: pixel count does not match dimensions");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write("SART", 4);
  io::put_le<std::uint16_t>(out, kTileVersion);
  io::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(tile.height));
  io::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(tile.width));
  io::put_le<std::uint8_t>(out, 1);
  io::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(tile.polarization));
  io::put_floats(out, tile.pixels.data(), tile.pixels.size());
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Tile read_tile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open tile " + path.string());
  try {
    io::expect_magic(in, "SART", "tile");
    const auto version = io::get_le<std::uint16_t>(in);
    if (version != kTileVersion) throw FormatError("unsupported tile version " + std::to_string(version));
    Tile tile;
    tile.height = io::get_le<std::uint16_t>(in);
    tile.width = io::get_le<std::uint16_t>(in);
    const auto channels = io::get_le<std::uint8_t>(in);
    const auto pol = io::get_le<std::uint8_t>(in);
    if (channels != 1) throw FormatError("only single-channel tiles are supported");
    if (pol > 1) throw FormatError("polarization code must be 0 (VH) or 1 (VV)");
    if (tile.height == 0 || tile.width == 0) throw FormatError("empty tile");
    tile.polarization = static_cast<Polarization>(pol);
    tile.pixels.resize(tile.height * tile.width);
    io::get_floats(in, tile.pixels.data(), tile.pixels.size());
    return tile;
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace sarcaps::data
