#pragma once

#include <cstdint>
#include <random>

namespace flowbins {

// splitmix64, used to derive independent seeds from a base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(splitmix64(base) ^ (0x632be59bd9b4e019ULL * (stream + 1)));
}

// Repo-wide random generator: mt19937_64 plus bounded draws that do not
// depend on std::uniform_int_distribution (keeps traces portable).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double next_double() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // uniform in [0, n), n > 0
    std::uint64_t next_below(std::uint64_t n) {
        // rejection sampling on the top bits; bias-free
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = engine_();
            if (r >= threshold) return r % n;
        }
    }

    bool next_bool() { return (engine_() & 1ULL) != 0; }

private:
    std::mt19937_64 engine_;
};

}  // namespace flowbins
