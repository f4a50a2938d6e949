#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace senti {

// Seeded generator used for every random decision in the project.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The standard *distributions* are not, so the conversions below
// are written out to keep results identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // Independent child stream; `stream` distinguishes consumers of one seed.
    static Rng derive(std::uint64_t seed, std::uint64_t stream) {
        return Rng(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL)));
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
};

// Stream identifiers for Rng::derive, one per consumer of the run seed.
namespace streams {
inline constexpr std::uint64_t split = 1;
inline constexpr std::uint64_t embedding_init = 2;
inline constexpr std::uint64_t embedding_windows = 3;
inline constexpr std::uint64_t embedding_negatives = 4;
inline constexpr std::uint64_t model_init = 5;
inline constexpr std::uint64_t shuffle = 6;
}  // namespace streams

}  // namespace senti
