#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include "sarcaps/data.hpp"

namespace sarcaps::data {

namespace {

std::optional<std::string> tag_value(const std::string& text, const std::string& tag) {
  const std::regex pattern("<" + tag + R"((?:\s[^>]*)?>\s*([^<]*?)\s*</)" + tag + ">");
  std::smatch m;
  if (!std::regex_search(text, m, pattern)) return std::nullopt;
  return m[1].str();
}

}  // namespace

Manifest import_directory(const std::filesystem::path& input, const std::filesystem::path& manifest_dir,
                          ImportStats* stats) {
  if (!std::filesystem::is_directory(input)) {
    throw std::invalid_argument("import: '" + input.string() + "' is not a directory");
  }
  std::vector<std::filesystem::path> metadata;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(input)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") metadata.push_back(entry.path());
  }
  std::sort(metadata.begin(), metadata.end());

  ImportStats local;
  Manifest m;
  m.directory = manifest_dir;
  for (const auto& meta : metadata) {
    ++local.metadata_files;
    std::ifstream in(meta);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto text = buffer.str();
    const auto elaborated = tag_value(text, "ElaboratedType");
    const auto ais = tag_value(text, "AISShipInformation");
    std::optional<ShipClass> cls;
    int ais_type = 0;
    if (elaborated && ais) {
      try {
        ais_type = std::stoi(*ais);
        cls = label_from_metadata(*elaborated, ais_type);
      } catch (const std::exception&) {
        cls.reset();
      }
    }
    if (!cls) {
      ++local.rejected_chips;
      continue;
    }
    const auto stem = meta.stem().string();
    bool any = false;
    for (auto pol : {Polarization::VH, Polarization::VV}) {
      const auto raster = meta.parent_path() / (stem + "_" + to_string(pol) + ".sart");
      if (!std::filesystem::exists(raster)) continue;
      any = true;
      TileRecord r;
      r.id = stem + "_" + to_string(pol);
      r.path = std::filesystem::relative(raster, manifest_dir).generic_string();
      r.ship_class = *cls;
      r.polarization = pol;
      r.elaborated_type = *elaborated;
      r.ais_type = ais_type;
      m.records.push_back(std::move(r));
    }
    if (any) {
      ++local.accepted_chips;
    } else {
      ++local.missing_rasters;
    }
  }
  if (stats) *stats = local;
  return m;
}

}  // namespace sarcaps::data
