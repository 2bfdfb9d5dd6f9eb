#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace cnoa {

using SecretKey = std::array<std::uint8_t, 16>;

// SipHash-2-4 of msg under key; the 8 output bytes read little-endian.
std::uint64_t keyedHash(const SecretKey& key, std::string_view msg);

// 32 hex digits; nullopt on malformed input.
std::optional<SecretKey> parseKeyHex(std::string_view hex);

}  // namespace cnoa
