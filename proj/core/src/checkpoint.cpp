#include "hoopnet/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "hoopnet/errors.hpp"
#include "hoopnet/fileio.hpp"

namespace hoopnet::seq {
namespace {

template <typename UInt>
void put(std::ostream& out, UInt value) {
  std::array<char, sizeof(UInt)> bytes{};
  for (std::size_t k = 0; k < sizeof(UInt); ++k) {
    bytes[k] = static_cast<char>((value >> (8 * k)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename UInt>
UInt get(std::istream& in) {
  std::array<unsigned char, sizeof(UInt)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw SchemaError("checkpoint truncated");
  UInt value = 0;
  for (std::size_t k = 0; k < sizeof(UInt); ++k) value |= static_cast<UInt>(bytes[k]) << (8 * k);
  return value;
}

}  // namespace

void save_checkpoint(std::ostream& out, const ModelParams& model) {
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  const auto& c = model.config;
  for (std::size_t v : {c.num_layers, c.units, c.components, c.seq_len, c.input_dim}) {
    put<std::uint64_t>(out, v);
  }
  const auto tensors = model.tensors();
  put<std::uint64_t>(out, tensors.size());
  for (const auto& t : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint64_t>(out, t.tensor->rows());
    put<std::uint64_t>(out, t.tensor->cols());
    for (double v : t.tensor->data()) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw IoError("failed writing checkpoint");
}

ModelParams load_checkpoint(std::istream& in) {
  char magic[sizeof kCheckpointMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw SchemaError("not a model checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw SchemaError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig config;
  config.num_layers = get<std::uint64_t>(in);
  config.units = get<std::uint64_t>(in);
  config.components = get<std::uint64_t>(in);
  config.seq_len = get<std::uint64_t>(in);
  config.input_dim = get<std::uint64_t>(in);
  ModelParams model = ModelParams::zeros(config);

  auto tensors = model.tensors();
  const auto count = get<std::uint64_t>(in);
  if (count != tensors.size()) {
    throw SchemaError("checkpoint holds " + std::to_string(count) + " tensors, config implies " +
                      std::to_string(tensors.size()));
  }
  for (auto& t : tensors) {
    const auto name_len = get<std::uint32_t>(in);
    if (name_len > 4096) throw SchemaError("checkpoint tensor name too long");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (name != t.name || rows != t.tensor->rows() || cols != t.tensor->cols()) {
      throw SchemaError("checkpoint tensor " + name + " does not match expected " + t.name + " " +
                        t.tensor->shape_string());
    }
    for (double& v : t.tensor->data()) v = std::bit_cast<double>(get<std::uint64_t>(in));
  }
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& model) {
  write_file_atomically(path, [&](std::ostream& out) { save_checkpoint(out, model); }, true);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace hoopnet::seq
