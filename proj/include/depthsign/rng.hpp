#ifndef DEPTHSIGN_RNG_HPP
#define DEPTHSIGN_RNG_HPP

#include <cstdint>
#include <vector>

namespace depthsign {

/// Deterministic counter-based random stream (splitmix64).
///
/// The same seed produces the same sequence of draws on every platform:
/// only unsigned 64-bit arithmetic is involved, never the standard
/// library's implementation-defined distributions. `split` derives an
/// independent stream, so concurrent consumers can draw without
/// perturbing the parent sequence.
class RngState {
public:
    explicit RngState(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 bits of mantissa.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double next_double(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Uniform integer in [0, n); n must be positive.
    std::size_t next_below(std::size_t n) {
        return static_cast<std::size_t>(next_u64() % static_cast<std::uint64_t>(n));
    }

    /// Derive an independent stream, advancing this one by one draw.
    RngState split() { return RngState(next_u64()); }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

/// Stream keyed by (seed, index): the same pair always yields the same
/// stream, regardless of how many other streams were derived before it.
inline RngState derive_stream(std::uint64_t seed, std::uint64_t index) {
    RngState r(seed ^ ((index + 1) * 0x9e3779b97f4a7c15ull));
    r.next_u64();
    return RngState(r.next_u64());
}

/// Fisher-Yates shuffle driven by the given stream.
template <typename T>
void shuffle(std::vector<T>& values, RngState& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        std::size_t j = rng.next_below(i);
        std::swap(values[i - 1], values[j]);
    }
}

} // namespace depthsign

#endif // DEPTHSIGN_RNG_HPP
