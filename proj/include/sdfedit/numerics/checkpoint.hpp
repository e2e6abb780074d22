#pragma once

#include "sdfedit/numerics/layers.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace sdfedit::nn {

// Checkpoint byte layout (all integers little-endian):
//
//   magic      8 bytes   "SDFECKPT"
//   version    u32       currently 1
//   count      u32       number of tensors N
//   manifest   N entries, each
//                u32 name length, name bytes (UTF-8)
//                u8  element type (1 = float64)
//                u8  rank R, then R x u64 extents
//   payloads   N raw arrays of IEEE-754 float64, little-endian, in manifest
//              order, each product(extents) elements long
//
// Loading rejects unknown magic, versions, element types, duplicate names
// and trailing bytes.

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes,
                                           const std::string& source = "checkpoint");

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

const Tensor& find_tensor(const std::vector<NamedTensor>& tensors, const std::string& name);

}  // namespace sdfedit::nn
