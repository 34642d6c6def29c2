#ifndef VMOPT_RNG_HPP
#define VMOPT_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace vmopt {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// All randomness flows from one base seed: a stream is identified by a
/// purpose tag (e.g. "nlp-start", "abm-chain") and an index within the
/// purpose, hashed as
///   splitmix64(base ^ splitmix64(fnv1a(purpose) ^ GOLDEN*(index+1))).
/// Identical (base, purpose, index) always yields the same stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view purpose, std::uint64_t index = 0) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : purpose) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return splitmix64(base ^ splitmix64(h ^ 0x9E3779B97F4A7C15ull * (index + 1)));
}

inline std::mt19937_64 make_rng(std::uint64_t base, std::string_view purpose, std::uint64_t index = 0) {
    return std::mt19937_64(derive_seed(base, purpose, index));
}

} // namespace vmopt

#endif // VMOPT_RNG_HPP
