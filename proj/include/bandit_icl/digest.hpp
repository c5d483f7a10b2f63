#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace bandit_icl {

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::span<const std::uint8_t> bytes);
std::string to_hex(std::span<const std::uint8_t> bytes);

/// Hex SHA-256 of a file's full contents.
std::string file_digest(const std::filesystem::path& path);

}  // namespace bandit_icl
