#include "sarcaps/checkpoint.hpp"

#include <fstream>

#include "sarcaps/binary_io.hpp"

namespace sarcaps {

namespace {
constexpr std::uint16_t kCheckpointVersion = 1;
}

const StoredTensor& Checkpoint::at(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw FormatError("checkpoint has no tensor '" + name + "'");
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::string meta = checkpoint.meta.dump();
  out.write("SARC", 4);
  io::put_le<std::uint16_t>(out, kCheckpointVersion);
  io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(checkpoint.tensors.size()));
  std::uint64_t offset = 0;
  for (const auto& t : checkpoint.tensors) {
    if (t.values.size() != numel(t.shape)) throw ShapeError("checkpoint tensor '" + t.name + "' size mismatch");
    io::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    io::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape.size()));
    for (auto d : t.shape) io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    io::put_le<std::uint64_t>(out, offset);
    offset += t.values.size();
  }
  for (const auto& t : checkpoint.tensors) io::put_floats(out, t.values.data(), t.values.size());
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  try {
    io::expect_magic(in, "SARC", "checkpoint");
    const auto version = io::get_le<std::uint16_t>(in);
    if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    std::string meta(io::get_le<std::uint32_t>(in), '\0');
    if (!in.read(meta.data(), static_cast<std::streamsize>(meta.size()))) throw FormatError("truncated metadata");
    Checkpoint ckpt;
    ckpt.meta = nlohmann::json::parse(meta);
    const auto count = io::get_le<std::uint32_t>(in);
    std::vector<std::uint64_t> offsets;
    for (std::uint32_t i = 0; i < count; ++i) {
      StoredTensor t;
      t.name.resize(io::get_le<std::uint16_t>(in));
      if (!in.read(t.name.data(), static_cast<std::streamsize>(t.name.size()))) throw FormatError("truncated name");
      const auto rank = io::get_le<std::uint8_t>(in);
      for (std::uint8_t d = 0; d < rank; ++d) t.shape.push_back(io::get_le<std::uint32_t>(in));
      offsets.push_back(io::get_le<std::uint64_t>(in));
      ckpt.tensors.push_back(std::move(t));
    }
    std::uint64_t expected = 0;
    for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
      auto& t = ckpt.tensors[i];
      if (offsets[i] != expected) throw FormatError("non-contiguous tensor offsets");
      t.values.resize(numel(t.shape));
      io::get_floats(in, t.values.data(), t.values.size());
      expected += t.values.size();
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad metadata: " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<StoredTensor> store_parameters(const std::vector<NamedParameter<float>>& params) {
  std::vector<StoredTensor> out;
  for (const auto& p : params) out.push_back({p.name, p.tensor.shape(), p.tensor.to_vector()});
  return out;
}

void load_parameters(const Checkpoint& checkpoint, const std::vector<NamedParameter<float>>& params) {
  for (const auto& p : params) {
    const auto& stored = checkpoint.at(p.name);
    if (stored.shape != p.tensor.shape()) {
      throw ShapeError("checkpoint tensor '" + p.name + "' has shape " + to_string(stored.shape) +
                       ", model expects " + to_string(p.tensor.shape()));
    }
    Tensor<float> handle = p.tensor;
    std::copy(stored.values.begin(), stored.values.end(), handle.mutable_data().begin());
  }
}

}  // namespace sarcaps
