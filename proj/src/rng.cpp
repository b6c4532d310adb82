#include "survaudit/rng.hpp"

#include <cmath>
#include <numbers>

namespace survaudit {

std::uint64_t SplitMix64::next_below(std::uint64_t bound) {
    if (bound == 0) throw NumericError("next_below: zero bound");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        std::uint64_t r = next();
        if (r >= threshold) return r % bound;
    }
}

double SplitMix64::next_gaussian() {
    // Box-Muller; u clamped away from 0 so log stays finite.
    double u = next_double();
    double v = next_double();
    if (u <= 0.0) u = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

namespace {
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view stream) {
    return mix64(mix64(base + 0x9e3779b97f4a7c15ULL) ^ fnv1a64(stream));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return mix64(mix64(base + 0x9e3779b97f4a7c15ULL) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace survaudit
