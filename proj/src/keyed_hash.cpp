#include "cnoa/keyed_hash.hpp"

#include <sodium.h>

#include <stdexcept>

namespace cnoa {

std::uint64_t keyedHash(const SecretKey& key, std::string_view msg)
{
    static_assert(crypto_shorthash_siphash24_KEYBYTES == 16);
    static const bool ready = sodium_init() >= 0;
    if (!ready) {
        throw std::runtime_error("libsodium initialisation failed");
    }
    unsigned char out[crypto_shorthash_siphash24_BYTES];
    crypto_shorthash_siphash24(out, reinterpret_cast<const unsigned char*>(msg.data()), msg.size(),
                               key.data());
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) {
        v = (v << 8) | out[i];
    }
    return v;
}

std::optional<SecretKey> parseKeyHex(std::string_view hex)
{
    if (hex.size() != 32) {
        return std::nullopt;
    }
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    SecretKey key{};
    for (std::size_t i = 0; i < 16; ++i) {
        int hi = nibble(hex[2 * i]);
        int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            return std::nullopt;
        }
        key[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return key;
}

}  // namespace cnoa
