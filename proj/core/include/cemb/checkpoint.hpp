#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cemb/network.hpp"

namespace cemb {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout, all integers and doubles little-endian:
//   "CEMB" | u32 version | u32 layer_count
//   per layer: u8 activation | u32 rows | u32 cols | f64[rows*cols] weights | f64[rows] bias
//   u32 bottleneck_index
std::vector<std::uint8_t> encode_checkpoint(const DenseNetwork& net);
/// Throws FormatError on bad magic, unknown version, truncation or trailing bytes.
DenseNetwork decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const DenseNetwork& net, const std::filesystem::path& path);
DenseNetwork load_checkpoint(const std::filesystem::path& path);

}  // namespace cemb
