#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace dofprior {

using Rng = std::mt19937_64;

// Independent stream keyed by a base seed and any number of stream ids
// (replicate index, chunk index, ...).
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids = {}) {
    std::vector<std::uint32_t> words;
    words.push_back(static_cast<std::uint32_t>(seed));
    words.push_back(static_cast<std::uint32_t>(seed >> 32));
    for (auto id : ids) {
        words.push_back(static_cast<std::uint32_t>(id));
        words.push_back(static_cast<std::uint32_t>(id >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

// splitmix64 mixing of a base seed with sub-stream ids.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed);
    for (auto id : ids) h = mix(h ^ mix(id));
    return h;
}

// Uniform in the open interval (0, 1).
inline double uniform_open(Rng& rng) {
    // 53 random bits offset by half an ulp
    return ((rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace dofprior
