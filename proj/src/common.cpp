#include "darag/common.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>

namespace darag {

std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng, std::size_t n,
                                                    std::size_t count) {
    if (count > n) throw Error("sample_without_replacement: count exceeds population");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    // Partial Fisher-Yates, explicit draws for portability.
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + next_below(rng, n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::string NormalizationPolicy::apply(std::string_view text) const {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    bool emitted = false;
    for (unsigned char c : text) {
        char ch = static_cast<char>(c);
        if (lowercase && c < 0x80) ch = static_cast<char>(std::tolower(c));
        if (strip_punctuation && c < 0x80 && std::ispunct(c)) continue;
        bool is_space = c < 0x80 && std::isspace(c);
        if (collapse_whitespace) {
            if (is_space) {
                pending_space = emitted;
                continue;
            }
            if (pending_space) {
                out.push_back(' ');
                pending_space = false;
            }
        }
        out.push_back(is_space && collapse_whitespace ? ' ' : ch);
        emitted = true;
    }
    if (!collapse_whitespace) return out;
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) tokens.emplace_back(text.substr(start, i - start));
    }
    return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return c < 0x80 ? static_cast<char>(std::tolower(c)) : c; });
    return out;
}

}  // namespace darag
