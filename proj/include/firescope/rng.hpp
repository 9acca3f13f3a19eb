#pragma once

#include <cstdint>
#include <vector>

namespace firescope {

/// SplitMix64 (Steele, Lea & Flood). Chosen over std:: engines because its
/// output sequence is fully pinned by these few lines, so samples replicate
/// bit-for-bit across compilers and platforms.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform value in [0, n) via Lemire's multiply-shift reduction.
    /// Slightly biased for astronomically large n; exact enough for index
    /// shuffles and, unlike std::uniform_int_distribution, portable.
    std::uint64_t bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

private:
    std::uint64_t state_;
};

/// In-place Fisher-Yates with a pinned sweep order (high index down).
template <typename T>
void deterministic_shuffle(std::vector<T>& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.bounded(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace firescope
