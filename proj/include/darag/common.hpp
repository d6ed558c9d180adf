#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace darag {

/// Toolkit-wide error type. Messages carry a stage or module label where useful.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Deterministic randomness helpers.
//
// std::mt19937_64 itself is portable, but the stdlib distributions are not.
// Everything below produces bit-identical results across platforms.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derive a per-item seed from a global seed and a string id, so that
/// parallel or reordered execution never changes per-item outputs.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view id) {
    return splitmix64(global_seed ^ fnv1a(id));
}

inline std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t index) {
    return splitmix64(global_seed + 0x9e3779b97f4a7c15ULL * (index + 1));
}

/// Uniform double in [0, 1).
inline double next_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). n must be > 0.
inline std::size_t next_below(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
}

/// Sample `count` distinct indices from [0, n), deterministic under the rng
/// state, returned in ascending order.
std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng, std::size_t n,
                                                    std::size_t count);

// ---------------------------------------------------------------------------
// Text normalization.
// ---------------------------------------------------------------------------

/// Normalization applied to every transcript and hypothesis before any
/// comparison. Defaults follow the corpus convention: lowercase, punctuation
/// stripped, whitespace collapsed. A token is a whitespace-separated word
/// after normalization.
struct NormalizationPolicy {
    bool lowercase = true;
    bool strip_punctuation = true;
    bool collapse_whitespace = true;

    std::string apply(std::string_view text) const;

    bool operator==(const NormalizationPolicy&) const = default;
};

std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(const std::vector<std::string>& tokens);
std::string to_lower(std::string_view s);

}  // namespace darag
