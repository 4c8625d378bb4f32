#pragma once

// Versioned binary checkpoint:
//   "SARC" | u16 version | u32 meta length | meta JSON (UTF-8)
//   | u32 tensor count | per tensor: u16 name length, name, u8 rank, u32 dims[rank], u64 offset
//   | little-endian f32 data; offsets count floats from the start of the data block.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sarcaps/model.hpp"
#include "sarcaps/tensor.hpp"

namespace sarcaps {

struct StoredTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  nlohmann::json meta;
  std::vector<StoredTensor> tensors;

  const StoredTensor& at(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

std::vector<StoredTensor> store_parameters(const std::vector<NamedParameter<float>>& params);
/// Copies stored values into the parameters by name; every parameter must be
/// present with a matching shape.
void load_parameters(const Checkpoint& checkpoint, const std::vector<NamedParameter<float>>& params);

}  // namespace sarcaps
