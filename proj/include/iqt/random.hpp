#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace iqt {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; decorrelates nearby seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Named, indexed substream of a root seed, so components can be re-run
/// independently and still draw the same numbers.
constexpr std::uint64_t substream_seed(std::uint64_t root, std::string_view name, std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ull; // FNV-1a
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return mix_seed(mix_seed(root ^ h) + index);
}

} // namespace iqt
