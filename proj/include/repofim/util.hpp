#pragma once

// Shared low-level helpers: hashing, seeded RNG, text normalization,
// gitignore-style globs and small filesystem wrappers.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace repofim {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad or missing configuration (unknown template, invalid field, ...).
struct ConfigError : Error {
    using Error::Error;
};

// A caller violated a documented precondition.
struct ContractError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Hashing

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
    return mix64(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

inline std::string to_hex16(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

// Deterministic splitmix64 generator. Used everywhere a seeded draw is
// needed; std:: distributions are not portable across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix64(state_);
    }

    // Unbiased uniform draw in [0, n). n must be > 0.
    uint64_t below(uint64_t n) {
        if (n == 0) throw ContractError("Rng::below called with n == 0");
        const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
        uint64_t v = next();
        while (v >= limit) v = next();
        return v % n;
    }

    // Uniform double in [0, 1) with 53 bits of entropy.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    uint64_t state_;
};

// ---------------------------------------------------------------------------
// Text

inline std::string normalize_newlines(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (c == '\r') {
            if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
            out.push_back('\n');
        } else {
            out.push_back(c);
        }
    }
    return out;
}

// Strict UTF-8 validation; rejects overlongs, surrogates and > U+10FFFF.
inline bool is_valid_utf8(std::string_view s) {
    size_t i = 0;
    const size_t n = s.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (c < 0x80) {
            ++i;
            continue;
        }
        int len;
        uint32_t cp;
        if ((c & 0xe0) == 0xc0) {
            len = 2;
            cp = c & 0x1f;
        } else if ((c & 0xf0) == 0xe0) {
            len = 3;
            cp = c & 0x0f;
        } else if ((c & 0xf8) == 0xf0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + static_cast<size_t>(len) > n) return false;
        for (int k = 1; k < len; ++k) {
            unsigned char cc = static_cast<unsigned char>(s[i + static_cast<size_t>(k)]);
            if ((cc & 0xc0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3f);
        }
        if (len == 2 && cp < 0x80) return false;
        if (len == 3 && cp < 0x800) return false;
        if (len == 4 && cp < 0x10000) return false;
        if (cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return false;
        i += static_cast<size_t>(len);
    }
    return true;
}

inline bool is_utf8_boundary(std::string_view s, size_t pos) {
    if (pos >= s.size()) return pos == s.size();
    return (static_cast<unsigned char>(s[pos]) & 0xc0) != 0x80;
}

inline bool is_space_char(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

// Maximal runs of non-whitespace characters.
inline std::vector<std::string_view> split_words(std::string_view s) {
    std::vector<std::string_view> words;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space_char(s[i])) ++i;
        size_t start = i;
        while (i < s.size() && !is_space_char(s[i])) ++i;
        if (i > start) words.push_back(s.substr(start, i - start));
    }
    return words;
}

// Line spans [begin, end) excluding the terminating LF. A trailing
// unterminated line counts; a final LF does not create an empty line.
inline std::vector<std::pair<size_t, size_t>> line_spans(std::string_view s) {
    std::vector<std::pair<size_t, size_t>> spans;
    size_t start = 0;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\n') {
            spans.emplace_back(start, i);
            start = i + 1;
        }
    }
    if (start < s.size()) spans.emplace_back(start, s.size());
    return spans;
}

inline size_t count_lines(std::string_view s) { return line_spans(s).size(); }

inline bool all_whitespace(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return is_space_char(c); });
}

// ---------------------------------------------------------------------------
// Filesystem

inline std::optional<std::string> read_file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) return std::nullopt;
    return ss.str();
}

inline std::string read_file_or_throw(const std::filesystem::path& p) {
    auto bytes = read_file_bytes(p);
    if (!bytes) throw Error("cannot read file: " + p.string());
    return *std::move(bytes);
}

inline void write_file(const std::filesystem::path& p, std::string_view content) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open file for writing: " + p.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write: " + p.string());
}

inline uint64_t hash_file_bytes(const std::filesystem::path& p) {
    auto bytes = read_file_bytes(p);
    if (!bytes) throw Error("cannot hash missing file: " + p.string());
    return fnv1a64(*bytes);
}

// ---------------------------------------------------------------------------
// Gitignore-style globs
//
// Supported: '*' (within a path segment), '?', '**' (across segments),
// leading '/' (anchors to the repo root), trailing '/' (directories only).
// A pattern without '/' matches the basename at any depth.

namespace detail {

inline bool glob_segment_match(std::string_view pat, std::string_view text) {
    size_t p = 0, t = 0, star_p = std::string_view::npos, star_t = 0;
    while (t < text.size()) {
        if (p < pat.size() && (pat[p] == '?' || pat[p] == text[t])) {
            ++p;
            ++t;
        } else if (p < pat.size() && pat[p] == '*') {
            star_p = p++;
            star_t = t;
        } else if (star_p != std::string_view::npos) {
            p = star_p + 1;
            t = ++star_t;
        } else {
            return false;
        }
    }
    while (p < pat.size() && pat[p] == '*') ++p;
    return p == pat.size();
}

inline std::vector<std::string_view> split_path(std::string_view s) {
    std::vector<std::string_view> parts;
    size_t start = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == '/') {
            if (i > start) parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

inline bool glob_parts_match(const std::vector<std::string_view>& pat, size_t pi,
                             const std::vector<std::string_view>& path, size_t ti) {
    while (pi < pat.size()) {
        if (pat[pi] == "**") {
            for (size_t skip = ti; skip <= path.size(); ++skip)
                if (glob_parts_match(pat, pi + 1, path, skip)) return true;
            return false;
        }
        if (ti >= path.size()) return false;
        if (!glob_segment_match(pat[pi], path[ti])) return false;
        ++pi;
        ++ti;
    }
    return ti == path.size();
}

} // namespace detail

inline bool glob_match(std::string_view pattern, std::string_view rel_path, bool is_dir = false) {
    if (pattern.empty()) return false;
    bool dir_only = false;
    if (pattern.back() == '/') {
        dir_only = true;
        pattern.remove_suffix(1);
    }
    if (dir_only && !is_dir) return false;
    bool anchored = false;
    if (!pattern.empty() && pattern.front() == '/') {
        anchored = true;
        pattern.remove_prefix(1);
    }
    auto path_parts = detail::split_path(rel_path);
    // Bare basename pattern: match the last component anywhere.
    if (!anchored && pattern.find('/') == std::string_view::npos) {
        for (auto part : path_parts)
            if (detail::glob_segment_match(pattern, part)) return true;
        return false;
    }
    auto pat_parts = detail::split_path(pattern);
    return detail::glob_parts_match(pat_parts, 0, path_parts, 0);
}

inline bool matches_any_glob(const std::vector<std::string>& patterns, std::string_view rel_path,
                             bool is_dir = false) {
    for (const auto& p : patterns)
        if (glob_match(p, rel_path, is_dir)) return true;
    return false;
}

} // namespace repofim
