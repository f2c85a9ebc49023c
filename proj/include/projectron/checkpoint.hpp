#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "projectron/network.hpp"

namespace projectron {

// Checkpoint layout, all integers and floats little-endian:
//   "PJTRCKPT"                       8-byte magic
//   u32 version (1)
//   u32 model kind                   0 projectron, 1 mlp
//   u64 input width, u64 classes
//   u32 layer count
//   per layer: u32 kind (0 dense, 1 rbf-pair), u32 activation, u64 in, u64 out
//   per parameter tensor, in declaration order:
//     u64 element count, then f64 values (dense weights row-major)
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_model(const Model& model);
Model deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace projectron
