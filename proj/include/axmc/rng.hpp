#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace axmc {

/// Seeded pseudo-random source whose draws are fully specified here rather than
/// delegated to the implementation-defined std distributions, so sequences and
/// serialized states are portable across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    /// Standard normal via Box-Muller; no cached second variate, so the state
    /// is exactly the engine state.
    double normal();

    std::uint64_t next_u64() { return engine_(); }

    std::string save() const;
    /// Throws Error(restore) on malformed input.
    void load(const std::string& state);

    friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

private:
    std::mt19937_64 engine_;
};

/// Fisher-Yates with Rng::below, deterministic for a given Rng state.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
    auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        auto j = rng.below(i);
        std::swap(first[i - 1], first[j]);
    }
}

}  // namespace axmc
