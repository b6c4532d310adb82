#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "survaudit/common.hpp"

namespace survaudit {

// SplitMix64: counter-based generator (Steele et al.), fully specified here so
// streams are reproducible across platforms and standard library versions.
// Every random draw in the project flows through this class; subseeds are
// derived from the single run seed via derive_seed.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0,1) with 53 bits of precision.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound), unbiased via rejection.
    std::uint64_t next_below(std::uint64_t bound);

    /// Standard normal via Box-Muller (two fresh uniforms per call).
    double next_gaussian();

  private:
    std::uint64_t state_;
};

/// Subseed for a named stage/stream of the given base seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream);

/// Subseed for an indexed substream (bootstrap replicate, boosting round, ...).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Fisher-Yates shuffle driven by SplitMix64.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace survaudit
