#include <cmath>
#include <cstdio>

#include "sarcaps/data.hpp"

namespace sarcaps::data {

namespace {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

struct Hull {
  double cy, cx, cos_a, sin_a, length, width;

  // position in the hull frame: u along the keel (bow at +L/2), v across
  void frame(double r, double c, double& u, double& v) const {
    const double dy = r - cy, dx = c - cx;
    u = dx * cos_a + dy * sin_a;
    v = -dx * sin_a + dy * cos_a;
  }

  bool contains(double u, double v) const {
    const double half_l = length / 2, half_w = width / 2;
    if (std::abs(u) > half_l) return false;
    const double bow = 0.18 * length;
    const double taper = u > half_l - bow ? (half_l - u) / bow : 1.0;
    return std::abs(v) <= half_w * std::max(taper, 0.15);
  }
};

// Reflectivity multiplier of the deck at hull coordinates (u, v).
double deck_pattern(ShipClass cls, const Hull& h, double u, double v, int blocks, double period) {
  const double t = (u + h.length / 2) / h.length;  // 0 at stern, 1 at bow
  switch (cls) {
    case ShipClass::Tanker:
      // bright accommodation block at the stern, smooth deck elsewhere
      return t < 0.12 ? 4.0 : 1.0;
    case ShipClass::BulkCarrier: {
      if (t < 0.1) return 3.0;
      const double span = (0.92 - 0.14) / blocks;
      const double local = (t - 0.14) / span;
      if (local < 0 || local >= blocks) return 1.0;
      const double frac = local - std::floor(local);
      const bool inside = frac > 0.18 && frac < 0.82 && std::abs(v) < h.width * 0.32;
      return inside ? 6.0 : 0.6;
    }
    case ShipClass::ContainerShip: {
      if (t < 0.08) return 3.0;
      const double phase = std::fmod(u + h.length, period) / period;
      return phase < 0.5 ? 4.5 : 0.35;
    }
  }
  return 1.0;
}

}  // namespace

std::vector<SynthTile> synth_dataset(const SynthOptions& options) {
  if (options.per_class == 0) throw std::invalid_argument("synth_dataset: per_class must be >= 1");
  if (options.size < 16) throw std::invalid_argument("synth_dataset: size must be >= 16");
  if (options.polarizations.empty()) throw std::invalid_argument("synth_dataset: no polarization requested");
  const std::size_t chips = options.per_class * kNumClasses;
  const std::size_t pols = options.polarizations.size();
  const double size = static_cast<double>(options.size);
  std::vector<SynthTile> out(chips * pols);

#pragma omp parallel for schedule(dynamic, 2)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(chips); ++k) {
    const auto chip = static_cast<std::size_t>(k);
    const auto cls = static_cast<ShipClass>(chip % kNumClasses);
    Rng rng = make_rng(options.seed, 0x5E40000 + chip);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double angle = unit(rng) * std::acos(-1.0);
    Hull hull{};
    hull.cy = (size - 1) / 2 + (unit(rng) - 0.5) * size / 8;
    hull.cx = (size - 1) / 2 + (unit(rng) - 0.5) * size / 8;
    hull.cos_a = std::cos(angle);
    hull.sin_a = std::sin(angle);
    hull.length = size * (0.45 + 0.25 * unit(rng));
    hull.width = hull.length * (0.13 + 0.05 * unit(rng));
    const int blocks = 3 + static_cast<int>(unit(rng) * 3);
    const double period = size * (0.045 + 0.02 * unit(rng));
    const double sea_db_offset = (unit(rng) - 0.5) * 4.0;
    const double hull_db_offset = (unit(rng) - 0.5) * 4.0;

    std::vector<std::uint8_t> mask(options.size * options.size);
    std::vector<double> reflectivity(mask.size());
    for (std::size_t r = 0; r < options.size; ++r) {
      for (std::size_t c = 0; c < options.size; ++c) {
        double u, v;
        hull.frame(static_cast<double>(r), static_cast<double>(c), u, v);
        if (hull.contains(u, v)) {
          mask[r * options.size + c] = 1;
          reflectivity[r * options.size + c] = deck_pattern(cls, hull, u, v, blocks, period);
        }
      }
    }

    for (std::size_t p = 0; p < pols; ++p) {
      const auto pol = options.polarizations[p];
      const bool vv = pol == Polarization::VV;
      const double sea = db_to_linear((vv ? -18.0 : -24.0) + sea_db_offset);
      const double ship = db_to_linear((vv ? -4.0 : -8.0) + hull_db_offset);
      // four-look intensity speckle
      std::gamma_distribution<double> speckle(4.0, 0.25);
      Tile tile{options.size, options.size, pol, std::vector<float>(mask.size())};
      for (std::size_t i = 0; i < mask.size(); ++i) {
        const double mean = mask[i] ? ship * reflectivity[i] : sea;
        tile.pixels[i] = static_cast<float>(mean * speckle(rng));
      }
      char id[64];
      std::snprintf(id, sizeof id, "synth_%05zu_%s", chip, to_string(pol).c_str());
      out[chip * pols + p] = {id, cls, std::move(tile), mask};
    }
  }
  return out;
}

Manifest write_synth_dataset(const std::vector<SynthTile>& tiles, const std::filesystem::path& manifest_dir,
                             const std::filesystem::path& tile_dir) {
  Manifest m;
  m.directory = manifest_dir;
  std::filesystem::create_directories(tile_dir);
  for (const auto& t : tiles) {
    const auto file = tile_dir / (t.id + ".sart");
    write_tile(file, t.tile);
    TileRecord r;
    r.id = t.id;
    r.path = std::filesystem::relative(file, manifest_dir).generic_string();
    r.ship_class = t.ship_class;
    r.polarization = t.tile.polarization;
    switch (t.ship_class) {
      case ShipClass::Tanker:
        r.elaborated_type = "Tanker";
        r.ais_type = 80;
        break;
      case ShipClass::ContainerShip:
        r.elaborated_type = "Container Ship";
        r.ais_type = 70;
        break;
      case ShipClass::BulkCarrier:
        r.elaborated_type = "Bulk Carrier";
        r.ais_type = 70;
        break;
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

}  // namespace sarcaps::data
