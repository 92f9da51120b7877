#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "cemb/network.hpp"

namespace cemb {

/// 64-bit FNV-1a. Used for artifact fingerprints in run manifests, not for security.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::string to_hex(std::uint64_t value);

std::uint64_t file_checksum(const std::filesystem::path& path);
/// Checksum of the checkpoint encoding, so it covers every parameter bit.
std::uint64_t network_checksum(const DenseNetwork& net);

}  // namespace cemb
