#pragma once

#include <cstdint>
#include <string_view>

namespace efoq {

// Deterministic 64-bit generator (splitmix64). All sampling in the pipeline
// flows from one master seed through named substreams, so outputs are
// reproducible across platforms and worker counts. The standard library
// distributions are avoided on purpose: their mapping from bits to values is
// implementation-defined.
struct Rng {
    std::uint64_t seed = 0;
    std::uint64_t state = 0;

    explicit Rng(std::uint64_t s = 0) : seed(s), state(s) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform draw in [0, n) by rejection; unbiased for every n >= 1.
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t v = next();
            if (v >= threshold) return v % n;
        }
    }

    // Substream keyed by this stream's seed and a label. Children depend only
    // on the seed, never on how far the parent has advanced, so tasks can be
    // scheduled in any order without changing what each one samples.
    Rng derive(std::string_view label) const {
        std::uint64_t h = 0xCBF29CE484222325ull;
        for (unsigned char c : label) {
            h ^= c;
            h *= 0x100000001B3ull;
        }
        Rng child(seed ^ h);
        child.next();
        return child;
    }
};

}  // namespace efoq
