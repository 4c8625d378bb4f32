#pragma once

// SAR ship tiles: file I/O, manifests, labeling, preparation to the model
// input size, polarization views, splitting and augmentation.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sarcaps/random.hpp"

namespace sarcaps::data {

enum class ShipClass : int { Tanker = 0, ContainerShip = 1, BulkCarrier = 2 };
constexpr std::size_t kNumClasses = 3;

enum class Polarization : std::uint8_t { VH = 0, VV = 1 };
enum class PolarizationMode { VH, VV, VHVV };
enum class Split { unassigned, train, val, test };
enum class AugmentPolicy { none, A, B };

std::string to_string(ShipClass c);
std::string to_string(Polarization p);
std::string to_string(PolarizationMode m);
std::string to_string(Split s);
std::string to_string(AugmentPolicy p);
ShipClass parse_ship_class(const std::string& text);
Polarization parse_polarization(const std::string& text);
PolarizationMode parse_mode(const std::string& text);
Split parse_split(const std::string& text);
AugmentPolicy parse_policy(const std::string& text);

/// Single-channel raster, row-major. Values are linear sigma0 unless noted.
struct Tile {
  std::size_t height = 0;
  std::size_t width = 0;
  Polarization polarization = Polarization::VH;
  std::vector<float> pixels;

  float at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
  float& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
};

/// "SART" | u16 version | u16 height | u16 width | u8 channels | u8 polarization | f32 data (LE).
void write_tile(const std::filesystem::path& path, const Tile& tile);
Tile read_tile(const std::filesystem::path& path);

struct TileRecord {
  std::string id;
  std::string path;  // relative to the manifest directory
  ShipClass ship_class = ShipClass::Tanker;
  Polarization polarization = Polarization::VH;
  Split split = Split::unassigned;
  bool synthetic = false;
  std::string elaborated_type;
  int ais_type = 0;
};

/// Physical chip a record belongs to: the id with a trailing "_VH"/"_VV" removed.
std::string chip_key(const TileRecord& record);

struct Manifest {
  std::filesystem::path directory;  // base for relative tile paths
  std::vector<TileRecord> records;

  std::filesystem::path tile_path(const TileRecord& r) const { return directory / r.path; }
  std::array<std::size_t, kNumClasses> class_counts(Split split, PolarizationMode mode) const;
  std::size_t count(Split split) const;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Class filter on the two AIS metadata fields; nullopt means rejected.
std::optional<ShipClass> label_from_metadata(const std::string& elaborated_type, int ais_type);

/// Median of the 2-pixel border ring.
float estimate_sea_background(const Tile& tile);

/// Bilinear resample when the tile exceeds `target`, otherwise centre padding
/// with the sea background.
Tile resize_or_pad(const Tile& tile, std::size_t target);

/// Half-pixel-centred bilinear resampling to height x width.
Tile resize_bilinear(const Tile& tile, std::size_t height, std::size_t width);

struct DbRange {
  double min = -35.0;
  double max = 0.0;
  void validate() const;
};

constexpr double kSigmaFloor = 1e-10;

/// sigma0 -> clamp((10 log10(max(x, 1e-10)) - min) / (max - min), 0, 1).
float normalize_value(float sigma0, const DbRange& range = {});
/// Inverse of normalize_value on [0, 1].
float denormalize_value(float unit, const DbRange& range = {});
std::vector<float> normalize_tile(const Tile& tile, const DbRange& range = {});
Tile denormalize_tile(const std::vector<float>& unit, std::size_t height, std::size_t width,
                      Polarization polarization, const DbRange& range = {});

/// Record indices visible under `mode`, optionally restricted to one split.
std::vector<std::size_t> select_polarization(const Manifest& manifest, PolarizationMode mode,
                                             std::optional<Split> split = std::nullopt);

struct SplitProportions {
  unsigned train = 64, val = 16, test = 20;
};

/// Stratified per class over chips: floor(n * train / 100), floor(n * val / 100),
/// remainder. Both polarizations of a chip land in the same split. Synthetic
/// records always go to train.
void split_dataset(Manifest& manifest, const SplitProportions& proportions, std::uint64_t seed);

/// Per-split chip counts for n chips of one class.
std::array<std::size_t, 3> split_counts(std::size_t n, const SplitProportions& proportions);

Tile flip_horizontal(const Tile& tile);
Tile flip_vertical(const Tile& tile);
/// Bilinear rotation about the centre; pixels sourced from outside take `fill`.
Tile rotate(const Tile& tile, double degrees, float fill);

/// Tile plus label as it flows through preparation and training.
struct Sample {
  std::string id;
  int label = 0;
  Split split = Split::train;
  Tile tile;
};

/// A: {original, h-flip, v-flip}. B: A plus one rotation drawn uniformly from
/// [-180, 180) degrees with sea-background fill. Throws unless every sample
/// belongs to the train split.
std::vector<Sample> augment(const std::vector<Sample>& train, AugmentPolicy policy, std::uint64_t seed);

/// Writes the flipped/rotated copies of every train record under `tile_dir`
/// and appends them as train records (ids suffixed +fh, +fv, +rot; the
/// synthetic flag follows the source). Returns the number of records added.
/// Throws if the manifest already holds augmented records.
std::size_t augment_manifest(Manifest& manifest, AugmentPolicy policy, std::uint64_t seed,
                             const std::filesystem::path& tile_dir);

/// Reads, resizes or pads, and returns tiles of `indices` in index order.
std::vector<Sample> load_samples(const Manifest& manifest, const std::vector<std::size_t>& indices,
                                 std::size_t target_size);

struct SynthOptions {
  std::size_t per_class = 20;
  std::size_t size = 64;
  std::uint64_t seed = 7;
  std::vector<Polarization> polarizations = {Polarization::VH};
};

struct SynthTile {
  std::string id;
  ShipClass ship_class;
  Tile tile;
  std::vector<std::uint8_t> ship_mask;  // 1 on hull and superstructure pixels
};

/// Procedural ships on speckled sea: plain hull (Tanker), hull with deck
/// blocks (BulkCarrier), hull with periodic stripes (ContainerShip). Chips are
/// interleaved by class; every chip yields one tile per requested polarization.
std::vector<SynthTile> synth_dataset(const SynthOptions& options);

/// Writes synth tiles under `tile_dir` and returns a manifest rooted at
/// `manifest_dir`.
Manifest write_synth_dataset(const std::vector<SynthTile>& tiles,
                             const std::filesystem::path& manifest_dir,
                             const std::filesystem::path& tile_dir);

struct ImportStats {
  std::size_t metadata_files = 0;
  std::size_t accepted_chips = 0;
  std::size_t rejected_chips = 0;
  std::size_t missing_rasters = 0;
};

/// Walks `input` for chip metadata files (*.xml carrying ElaboratedType and
/// AISShipInformation) and pairs each accepted chip with the rasters
/// <stem>_VH.sart / <stem>_VV.sart next to it.
Manifest import_directory(const std::filesystem::path& input, const std::filesystem::path& manifest_dir,
                          ImportStats* stats = nullptr);

}  // namespace sarcaps::data
