#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>

#include "sarcaps/data.hpp"
#include "sarcaps/error.hpp"

namespace sarcaps::data {

float estimate_sea_background(const Tile& tile) {
  if (tile.height < 8 || tile.width < 8) {
    throw std::invalid_argument("estimate_sea_background: tile must be at least 8x8");
  }
  std::vector<float> ring;
  ring.reserve(4 * (tile.height + tile.width));
  for (std::size_t r = 0; r < tile.height; ++r) {
    for (std::size_t c = 0; c < tile.width; ++c) {
      const bool border = r < 2 || c < 2 || r + 2 >= tile.height || c + 2 >= tile.width;
      if (border) ring.push_back(tile.at(r, c));
    }
  }
  const std::size_t mid = ring.size() / 2;
  std::nth_element(ring.begin(), ring.begin() + mid, ring.end());
  const float upper = ring[mid];
  if (ring.size() % 2 == 1) return upper;
  const float lower = *std::max_element(ring.begin(), ring.begin() + mid);
  return lower + (upper - lower) * 0.5f;
}

Tile resize_bilinear(const Tile& tile, std::size_t height, std::size_t width) {
  if (tile.pixels.empty() || height == 0 || width == 0) throw std::invalid_argument("resize: empty tile");
  Tile out{height, width, tile.polarization, std::vector<float>(height * width)};
  const double sy = static_cast<double>(tile.height) / static_cast<double>(height);
  const double sx = static_cast<double>(tile.width) / static_cast<double>(width);
  auto axis = [](double pos, std::size_t len, std::size_t& i0, std::size_t& i1, double& w) {
    pos = std::clamp(pos, 0.0, static_cast<double>(len - 1));
    i0 = static_cast<std::size_t>(std::floor(pos));
    i1 = std::min(i0 + 1, len - 1);
    w = pos - static_cast<double>(i0);
  };
  for (std::size_t r = 0; r < height; ++r) {
    std::size_t r0, r1;
    double wy;
    axis((static_cast<double>(r) + 0.5) * sy - 0.5, tile.height, r0, r1, wy);
    for (std::size_t c = 0; c < width; ++c) {
      std::size_t c0, c1;
      double wx;
      axis((static_cast<double>(c) + 0.5) * sx - 0.5, tile.width, c0, c1, wx);
      const double top = tile.at(r0, c0) * (1 - wx) + tile.at(r0, c1) * wx;
      const double bottom = tile.at(r1, c0) * (1 - wx) + tile.at(r1, c1) * wx;
      out.at(r, c) = static_cast<float>(top * (1 - wy) + bottom * wy);
    }
  }
  return out;
}

Tile resize_or_pad(const Tile& tile, std::size_t target) {
  if (tile.pixels.empty() || tile.height == 0 || tile.width == 0) {
    throw std::invalid_argument("resize_or_pad: empty tile");
  }
  if (tile.height == target && tile.width == target) return tile;
  if (std::max(tile.height, tile.width) > target) return resize_bilinear(tile, target, target);
  float fill;
  if (tile.height >= 8 && tile.width >= 8) {
    fill = estimate_sea_background(tile);
  } else {
    std::vector<float> all = tile.pixels;
    std::nth_element(all.begin(), all.begin() + all.size() / 2, all.end());
    fill = all[all.size() / 2];
  }
  Tile out{target, target, tile.polarization, std::vector<float>(target * target, fill)};
  const std::size_t top = (target - tile.height) / 2, left = (target - tile.width) / 2;
  for (std::size_t r = 0; r < tile.height; ++r) {
    std::copy_n(tile.pixels.begin() + r * tile.width, tile.width, out.pixels.begin() + (top + r) * target + left);
  }
  return out;
}

void DbRange::validate() const {
  if (!(min < max)) throw std::invalid_argument("dB range requires db_min < db_max");
}

float normalize_value(float sigma0, const DbRange& range) {
  const double db = 10.0 * std::log10(std::max(static_cast<double>(sigma0), kSigmaFloor));
  return static_cast<float>(std::clamp((db - range.min) / (range.max - range.min), 0.0, 1.0));
}

float denormalize_value(float unit, const DbRange& range) {
  const double db = range.min + static_cast<double>(unit) * (range.max - range.min);
  return static_cast<float>(std::pow(10.0, db / 10.0));
}

std::vector<float> normalize_tile(const Tile& tile, const DbRange& range) {
  range.validate();
  std::vector<float> out(tile.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (tile.pixels[i] < 0.0f) throw std::invalid_argument("normalize_tile: negative sigma0");
    out[i] = normalize_value(tile.pixels[i], range);
  }
  return out;
}

Tile denormalize_tile(const std::vector<float>& unit, std::size_t height, std::size_t width,
                      Polarization polarization, const DbRange& range) {
  range.validate();
  if (unit.size() != height * width) throw std::invalid_argument("denormalize_tile: size mismatch");
  Tile out{height, width, polarization, std::vector<float>(unit.size())};
  for (std::size_t i = 0; i < unit.size(); ++i) out.pixels[i] = denormalize_value(unit[i], range);
  return out;
}

Tile flip_horizontal(const Tile& tile) {
  Tile out = tile;
  for (std::size_t r = 0; r < tile.height; ++r) {
    std::reverse(out.pixels.begin() + r * tile.width, out.pixels.begin() + (r + 1) * tile.width);
  }
  return out;
}

Tile flip_vertical(const Tile& tile) {
  Tile out = tile;
  for (std::size_t r = 0; r < tile.height; ++r) {
    std::copy_n(tile.pixels.begin() + (tile.height - 1 - r) * tile.width, tile.width,
                out.pixels.begin() + r * tile.width);
  }
  return out;
}

Tile rotate(const Tile& tile, double degrees, float fill) {
  Tile out{tile.height, tile.width, tile.polarization, std::vector<float>(tile.pixels.size(), fill)};
  const double theta = degrees * std::acos(-1.0) / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double cy = (static_cast<double>(tile.height) - 1) / 2, cx = (static_cast<double>(tile.width) - 1) / 2;
  const double max_y = static_cast<double>(tile.height - 1), max_x = static_cast<double>(tile.width - 1);
  for (std::size_t r = 0; r < tile.height; ++r) {
    for (std::size_t c = 0; c < tile.width; ++c) {
      const double dy = static_cast<double>(r) - cy, dx = static_cast<double>(c) - cx;
      // inverse rotation maps the output pixel back into the source
      double sy = cy + cs * dy - sn * dx;
      double sx = cx + sn * dy + cs * dx;
      constexpr double slack = 1e-9;
      if (sy < -slack || sx < -slack || sy > max_y + slack || sx > max_x + slack) continue;
      sy = std::clamp(sy, 0.0, max_y);
      sx = std::clamp(sx, 0.0, max_x);
      const auto y0 = static_cast<std::size_t>(sy), x0 = static_cast<std::size_t>(sx);
      const std::size_t y1 = std::min(y0 + 1, tile.height - 1), x1 = std::min(x0 + 1, tile.width - 1);
      const double wy = sy - static_cast<double>(y0), wx = sx - static_cast<double>(x0);
      const double top = tile.at(y0, x0) * (1 - wx) + tile.at(y0, x1) * wx;
      const double bottom = tile.at(y1, x0) * (1 - wx) + tile.at(y1, x1) * wx;
      out.at(r, c) = static_cast<float>(top * (1 - wy) + bottom * wy);
    }
  }
  return out;
}

std::vector<Sample> augment(const std::vector<Sample>& train, AugmentPolicy policy, std::uint64_t seed) {
  for (const auto& s : train) {
    if (s.split != Split::train) {
      throw std::invalid_argument("augment: sample '" + s.id + "' is not in the train split");
    }
  }
  if (policy == AugmentPolicy::none) return train;
  std::vector<Sample> out;
  out.reserve(train.size() * (policy == AugmentPolicy::A ? 3 : 4));
  Rng rng = make_rng(seed, 0xA06);
  std::uniform_real_distribution<double> angle(-180.0, 180.0);
  for (const auto& s : train) {
    out.push_back(s);
    out.push_back({s.id + "+fh", s.label, Split::train, flip_horizontal(s.tile)});
    out.push_back({s.id + "+fv", s.label, Split::train, flip_vertical(s.tile)});
    if (policy == AugmentPolicy::B) {
      const double deg = angle(rng);
      out.push_back({s.id + "+rot", s.label, Split::train, rotate(s.tile, deg, estimate_sea_background(s.tile))});
    }
  }
  return out;
}

std::size_t augment_manifest(Manifest& manifest, AugmentPolicy policy, std::uint64_t seed,
                             const std::filesystem::path& tile_dir) {
  std::vector<Sample> train;
  std::vector<std::size_t> source;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    if (r.id.find('+') != std::string::npos) {
      throw std::invalid_argument("augment: manifest already holds augmented record '" + r.id + "'");
    }
    if (r.split != Split::train) continue;
    train.push_back({r.id, static_cast<int>(r.ship_class), Split::train, read_tile(manifest.tile_path(r))});
    source.push_back(i);
  }
  const auto out = augment(train, policy, seed);
  if (out.size() == train.size()) return 0;
  std::filesystem::create_directories(tile_dir);
  const std::size_t per = out.size() / train.size();
  std::vector<TileRecord> added;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (k % per == 0) continue;
    TileRecord r = manifest.records[source[k / per]];
    r.id = out[k].id;
    const auto file = tile_dir / (r.id + ".sart");
    write_tile(file, out[k].tile);
    const auto rel = file.lexically_relative(manifest.directory);
    r.path = (rel.empty() ? file : rel).generic_string();
    added.push_back(std::move(r));
  }
  manifest.records.insert(manifest.records.end(), added.begin(), added.end());
  return added.size();
}

std::vector<Sample> load_samples(const Manifest& manifest, const std::vector<std::size_t>& indices,
                                 std::size_t target_size) {
  std::vector<Sample> out(indices.size());
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(indices.size()); ++k) {
    try {
      const auto& r = manifest.records.at(indices[static_cast<std::size_t>(k)]);
      auto tile = read_tile(manifest.tile_path(r));
      if (tile.polarization != r.polarization) {
        throw FormatError(r.path + ": polarization in file disagrees with manifest");
      }
      out[static_cast<std::size_t>(k)] = {r.id, static_cast<int>(r.ship_class), r.split,
                                          resize_or_pad(tile, target_size)};
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace sarcaps::data
