#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spcc {

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_hex(std::span<const std::uint8_t> bytes);

// Stable 64-bit key derived from the digest, used for deterministic choices.
std::uint64_t stable_key(std::string_view text);

std::string base64_encode(std::span<const std::uint8_t> bytes);

}  // namespace spcc
