#pragma once

#include <cstdint>
#include <random>

namespace cnoa {

// Seeded source for every random choice in a run. Only raw mt19937_64
// outputs are consumed (std distributions are implementation-defined), so a
// given seed yields the same stream on every platform.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next64() { return engine_(); }

    // High half of one 64-bit output.
    std::uint32_t next32() { return static_cast<std::uint32_t>(engine_() >> 32); }

    // Uniform in [0, bound) by rejection; bound must be nonzero.
    std::uint64_t below(std::uint64_t bound);

    // Derive an independent stream seed from a parent seed and a tag.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag);

private:
    std::mt19937_64 engine_;
};

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t SeededRng::below(std::uint64_t bound)
{
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = engine_();
    while (x >= limit) {
        x = engine_();
    }
    return x % bound;
}

inline std::uint64_t SeededRng::derive(std::uint64_t seed, std::uint64_t tag)
{
    return splitmix64(seed ^ splitmix64(tag));
}

}  // namespace cnoa
