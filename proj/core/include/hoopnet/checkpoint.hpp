#pragma once

// Binary model checkpoint.
//
// Layout (all integers little-endian, doubles as IEEE-754 binary64 bit patterns):
//
//   magic        8 bytes   "HOOPMDN\0"
//   version      u32       1
//   config       5 x u64   num_layers, units, components, seq_len, input_dim
//   tensor_count u64
//   per tensor   u32 name length, name bytes, u64 rows, u64 cols, rows*cols x f64
//
// Tensors appear in ModelParams::tensors() order; load verifies names and shapes.

#include <filesystem>
#include <iosfwd>

#include "hoopnet/seqnet.hpp"

namespace hoopnet::seq {

inline constexpr char kCheckpointMagic[8] = {'H', 'O', 'O', 'P', 'M', 'D', 'N', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(std::ostream& out, const ModelParams& model);
ModelParams load_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& model);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace hoopnet::seq
