#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "sarcaps/data.hpp"
#include "sarcaps/error.hpp"

namespace sarcaps::data {

namespace {

const char* const kHeader = "id,path,ship_class,polarization,split,synthetic,elaborated_type,ais_type";

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  if (quoted) throw FormatError("manifest line " + std::to_string(line_no) + ": unterminated quote");
  return fields;
}

template <typename E, std::size_t N>
E parse_enum(const std::string& text, const std::array<std::pair<const char*, E>, N>& table,
             const char* what) {
  for (const auto& [name, value] : table) {
    if (text == name) return value;
  }
  throw std::invalid_argument(std::string("unknown ") + what + " '" + text + "'");
}

const std::array<std::pair<const char*, ShipClass>, 3> kClassNames{{
    {"Tanker", ShipClass::Tanker},
    {"ContainerShip", ShipClass::ContainerShip},
    {"BulkCarrier", ShipClass::BulkCarrier},
}};

}  // namespace

std::string to_string(ShipClass c) { return kClassNames[static_cast<int>(c)].first; }
std::string to_string(Polarization p) { return p == Polarization::VH ? "VH" : "VV"; }
std::string to_string(PolarizationMode m) {
  switch (m) {
    case PolarizationMode::VH: return "VH";
    case PolarizationMode::VV: return "VV";
    case PolarizationMode::VHVV: return "VHVV";
  }
  return "?";
}
std::string to_string(Split s) {
  switch (s) {
    case Split::unassigned: return "";
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}
std::string to_string(AugmentPolicy p) {
  switch (p) {
    case AugmentPolicy::none: return "none";
    case AugmentPolicy::A: return "A";
    case AugmentPolicy::B: return "B";
  }
  return "?";
}

ShipClass parse_ship_class(const std::string& text) { return parse_enum(text, kClassNames, "ship class"); }

Polarization parse_polarization(const std::string& text) {
  return parse_enum(text, std::array<std::pair<const char*, Polarization>, 2>{{
                              {"VH", Polarization::VH}, {"VV", Polarization::VV}}},
                    "polarization");
}

PolarizationMode parse_mode(const std::string& text) {
  return parse_enum(text, std::array<std::pair<const char*, PolarizationMode>, 4>{{
                              {"VH", PolarizationMode::VH},
                              {"VV", PolarizationMode::VV},
                              {"VHVV", PolarizationMode::VHVV},
                              {"VH-VV", PolarizationMode::VHVV}}},
                    "polarization mode");
}

Split parse_split(const std::string& text) {
  return parse_enum(text, std::array<std::pair<const char*, Split>, 4>{{
                              {"", Split::unassigned},
                              {"train", Split::train},
                              {"val", Split::val},
                              {"test", Split::test}}},
                    "split");
}

AugmentPolicy parse_policy(const std::string& text) {
  return parse_enum(text, std::array<std::pair<const char*, AugmentPolicy>, 3>{{
                              {"none", AugmentPolicy::none}, {"A", AugmentPolicy::A}, {"B", AugmentPolicy::B}}},
                    "augmentation policy");
}

std::string chip_key(const TileRecord& record) {
  const auto& id = record.id;
  if (id.size() > 3) {
    const auto tail = id.substr(id.size() - 3);
    if (tail == "_VH" || tail == "_VV") return id.substr(0, id.size() - 3);
  }
  return id;
}

std::array<std::size_t, kNumClasses> Manifest::class_counts(Split split, PolarizationMode mode) const {
  std::array<std::size_t, kNumClasses> counts{};
  for (std::size_t i : select_polarization(*this, mode, split)) {
    ++counts[static_cast<std::size_t>(records[i].ship_class)];
  }
  return counts;
}

std::size_t Manifest::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [&](const TileRecord& r) { return r.split == split; }));
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  Manifest m;
  m.directory = path.parent_path();
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw FormatError(path.string() + ": unexpected header '" + line + "'");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line, line_no);
    if (f.size() != 8) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 8 fields, got " +
                        std::to_string(f.size()));
    }
    try {
      TileRecord r;
      r.id = f[0];
      r.path = f[1];
      r.ship_class = parse_ship_class(f[2]);
      r.polarization = parse_polarization(f[3]);
      r.split = parse_split(f[4]);
      if (f[5] != "0" && f[5] != "1") throw std::invalid_argument("synthetic must be 0 or 1");
      r.synthetic = f[5] == "1";
      r.elaborated_type = f[6];
      r.ais_type = f[7].empty() ? 0 : std::stoi(f[7]);
      m.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write manifest " + path.string());
    out << kHeader << '\n';
    for (const auto& r : manifest.records) {
      out << quote(r.id) << ',' << quote(r.path) << ',' << to_string(r.ship_class) << ','
          << to_string(r.polarization) << ',' << to_string(r.split) << ',' << (r.synthetic ? 1 : 0) << ','
          << quote(r.elaborated_type) << ',' << r.ais_type << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

std::optional<ShipClass> label_from_metadata(const std::string& elaborated_type, int ais_type) {
  const bool cargo_range = ais_type >= 70 && ais_type <= 79;
  const bool tanker_range = ais_type >= 80 && ais_type <= 89;
  if (elaborated_type == "Container Ship" && cargo_range) return ShipClass::ContainerShip;
  if (elaborated_type == "Tanker" && tanker_range) return ShipClass::Tanker;
  if (elaborated_type == "Bulk Carrier" && cargo_range) return ShipClass::BulkCarrier;
  return std::nullopt;
}

std::vector<std::size_t> select_polarization(const Manifest& manifest, PolarizationMode mode,
                                             std::optional<Split> split) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    if (split && r.split != *split) continue;
    const bool keep = mode == PolarizationMode::VHVV ||
                      (mode == PolarizationMode::VH && r.polarization == Polarization::VH) ||
                      (mode == PolarizationMode::VV && r.polarization == Polarization::VV);
    if (keep) out.push_back(i);
  }
  return out;
}

std::array<std::size_t, 3> split_counts(std::size_t n, const SplitProportions& p) {
  if (p.train + p.val + p.test != 100) throw std::invalid_argument("split proportions must sum to 100");
  const std::size_t train = n * p.train / 100;
  const std::size_t val = n * p.val / 100;
  return {train, val, n - train - val};
}

void split_dataset(Manifest& manifest, const SplitProportions& proportions, std::uint64_t seed) {
  split_counts(0, proportions);
  for (const auto& r : manifest.records) {
    if (r.id.find('+') != std::string::npos) {
      throw std::invalid_argument("split: manifest holds augmented record '" + r.id + "'; split before augmenting");
    }
  }
  // chips per class, in first-appearance order
  std::array<std::vector<std::string>, kNumClasses> chips;
  std::map<std::string, ShipClass> chip_class;
  for (const auto& r : manifest.records) {
    if (r.synthetic) continue;
    const auto key = chip_key(r);
    auto [it, inserted] = chip_class.emplace(key, r.ship_class);
    if (inserted) {
      chips[static_cast<std::size_t>(r.ship_class)].push_back(key);
    } else if (it->second != r.ship_class) {
      throw std::invalid_argument("chip '" + key + "' carries two different class labels");
    }
  }
  if (chip_class.empty()) throw std::invalid_argument("split_dataset: manifest has no original records");
  std::map<std::string, Split> assignment;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& list = chips[c];
    Rng rng = make_rng(seed, 0x5B1 + c);
    std::shuffle(list.begin(), list.end(), rng);
    const auto counts = split_counts(list.size(), proportions);
    for (std::size_t i = 0; i < list.size(); ++i) {
      assignment[list[i]] = i < counts[0] ? Split::train : i < counts[0] + counts[1] ? Split::val : Split::test;
    }
  }
  for (auto& r : manifest.records) r.split = r.synthetic ? Split::train : assignment.at(chip_key(r));
}

}  // namespace sarcaps::data
