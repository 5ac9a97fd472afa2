#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace concgraph {

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::string_view data);
/// Streams the file; throws IoError if it cannot be read.
Sha256 sha256_file(const std::filesystem::path& path);

std::string to_hex(const Sha256& digest);
/// Parses 64 hex digits; throws IoError otherwise.
Sha256 from_hex(std::string_view hex);

inline std::string sha256_hex(std::string_view data) { return to_hex(sha256(data)); }

}  // namespace concgraph
