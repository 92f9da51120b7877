#include "cemb/checksum.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <vector>

#include "cemb/checkpoint.hpp"
#include "cemb/errors.hpp"

namespace cemb {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>()};
  return fnv1a64(bytes);
}

std::uint64_t network_checksum(const DenseNetwork& net) {
  return fnv1a64(encode_checkpoint(net));
}

}  // namespace cemb
