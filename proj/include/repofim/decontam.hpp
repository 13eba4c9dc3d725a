#pragma once

// Decontamination: build a fingerprint index of word n-grams over reference
// corpora and drop tasks whose ground-truth region reproduces any indexed
// n-gram exactly. Normalization is lowercase + whitespace collapse; each
// n-word window is hashed to 64 bits. The check window covers the middle
// plus 40 surrounding words of prefix/suffix so n-grams straddling the mask
// boundary are caught.
//
// With 64-bit fingerprints the false-drop probability for one checked window
// is |index| / 2^64; exact matches are never missed. An in-memory audit mode
// keeps the raw n-gram strings for exact verification.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "repofim/mask.hpp"
#include "repofim/util.hpp"

namespace repofim {

struct DecontamError : Error {
    using Error::Error;
};

struct NGramIndex {
    size_t n = 20;
    std::vector<uint64_t> fingerprints; // sorted, deduplicated
    std::vector<std::string> source_labels;
    // Audit mode only: the raw normalized n-grams behind the fingerprints.
    std::unordered_set<std::string> raw_ngrams;
    bool keeps_raw = false;

    bool contains(uint64_t fp) const {
        return std::binary_search(fingerprints.begin(), fingerprints.end(), fp);
    }
    bool contains_exact(std::string_view gram) const {
        return raw_ngrams.count(std::string(gram)) > 0;
    }
    size_t size() const { return fingerprints.size(); }
};

namespace detail {

// lowercase + collapse whitespace runs + split on single spaces.
inline std::vector<std::string> normalize_words(std::string_view text) {
    std::string lowered = ascii_lower(text);
    std::vector<std::string> words;
    for (auto w : split_words(lowered)) words.emplace_back(w);
    return words;
}

inline std::string join_ngram(const std::vector<std::string>& words, size_t start, size_t n) {
    std::string out;
    for (size_t i = 0; i < n; ++i) {
        if (i) out.push_back(' ');
        out += words[start + i];
    }
    return out;
}

inline void index_word_stream(NGramIndex& index, const std::vector<std::string>& words,
                              std::vector<uint64_t>& sink) {
    if (words.size() < index.n) return;
    for (size_t i = 0; i + index.n <= words.size(); ++i) {
        std::string gram = join_ngram(words, i, index.n);
        sink.push_back(fnv1a64(gram));
        if (index.keeps_raw) index.raw_ngrams.insert(std::move(gram));
    }
}

} // namespace detail

// Build an index over reference corpora. Plain files contribute one word
// stream each; .jsonl/.ndjson files contribute one stream per record (the
// "text" field when present, otherwise the raw line). Unreadable corpus
// files are fatal: a silently partial index would weaken decontamination.
inline NGramIndex build_ngram_index(const std::vector<std::filesystem::path>& corpus_paths,
                                    size_t n = 20, bool keep_raw = false) {
    if (n < 1) throw ContractError("n-gram size must be >= 1");
    NGramIndex index;
    index.n = n;
    index.keeps_raw = keep_raw;
    std::vector<uint64_t> sink;
    for (const auto& path : corpus_paths) {
        auto bytes = read_file_bytes(path);
        if (!bytes) throw DecontamError("cannot read reference corpus: " + path.string());
        index.source_labels.push_back(path.filename().string());
        auto ext = ascii_lower(path.extension().string());
        if (ext == ".jsonl" || ext == ".ndjson") {
            size_t start = 0;
            std::string_view sv(*bytes);
            while (start <= sv.size()) {
                size_t nl = sv.find('\n', start);
                std::string_view line =
                    sv.substr(start, nl == std::string_view::npos ? sv.size() - start : nl - start);
                if (!line.empty()) {
                    auto rec = nlohmann::json::parse(line, nullptr, false);
                    std::string text;
                    if (!rec.is_discarded() && rec.is_object() && rec.contains("text") &&
                        rec["text"].is_string())
                        text = rec["text"].get<std::string>();
                    else
                        text = std::string(line);
                    detail::index_word_stream(index, detail::normalize_words(text), sink);
                }
                if (nl == std::string_view::npos) break;
                start = nl + 1;
            }
        } else {
            detail::index_word_stream(index, detail::normalize_words(*bytes), sink);
        }
    }
    std::sort(sink.begin(), sink.end());
    sink.erase(std::unique(sink.begin(), sink.end()), sink.end());
    index.fingerprints = std::move(sink);
    return index;
}

// The text region checked for a task: the middle plus up to `window_words`
// surrounding words on each side, taken from the raw text so that words
// straddling the mask boundary are reassembled before normalization.
inline constexpr size_t kDecontamWindowWords = 40;

inline std::string decontam_check_text(const MaskTask& task,
                                       size_t window_words = kDecontamWindowWords) {
    std::string_view prefix = task.prefix;
    std::string_view suffix = task.suffix;

    // Last `window_words` words of the prefix.
    size_t prefix_cut = 0;
    {
        auto words = split_words(prefix);
        if (words.size() > window_words)
            prefix_cut = static_cast<size_t>(words[words.size() - window_words].data() -
                                             prefix.data());
    }
    // First `window_words` words of the suffix.
    size_t suffix_cut = suffix.size();
    {
        auto words = split_words(suffix);
        if (words.size() > window_words) {
            const auto& last = words[window_words - 1];
            suffix_cut = static_cast<size_t>(last.data() + last.size() - suffix.data());
        }
    }
    std::string out;
    out.reserve((prefix.size() - prefix_cut) + task.middle.size() + suffix_cut);
    out += prefix.substr(prefix_cut);
    out += task.middle;
    out += suffix.substr(0, suffix_cut);
    return out;
}

inline bool task_is_contaminated(const MaskTask& task, const NGramIndex& index) {
    auto words = detail::normalize_words(decontam_check_text(task));
    if (words.size() < index.n) return false;
    for (size_t i = 0; i + index.n <= words.size(); ++i) {
        std::string gram = detail::join_ngram(words, i, index.n);
        if (!index.contains(fnv1a64(gram))) continue;
        if (index.keeps_raw && !index.contains_exact(gram)) continue; // audit mode
        return true;
    }
    return false;
}

// Splits tasks into (kept, dropped), preserving order within each.
inline std::pair<std::vector<MaskTask>, std::vector<MaskTask>> filter_tasks(
    const std::vector<MaskTask>& tasks, const NGramIndex& index) {
    std::pair<std::vector<MaskTask>, std::vector<MaskTask>> out;
    for (const auto& task : tasks) {
        if (index.size() > 0 && task_is_contaminated(task, index))
            out.second.push_back(task);
        else
            out.first.push_back(task);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Index persistence: header (magic, version, n, hash id, count, labels)
// followed by the sorted fingerprints, little-endian.

inline constexpr uint32_t kIndexMagic = 0x474e4652; // "RFNG"
inline constexpr uint32_t kIndexVersion = 1;
inline constexpr uint32_t kHashFnv1a64 = 1;
inline constexpr const char* kIndexFileName = "ngrams.idx";

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline uint32_t get_u32(std::string_view s, size_t& pos) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(s[pos++])) << (8 * i);
    return v;
}
inline uint64_t get_u64(std::string_view s, size_t& pos) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(s[pos++])) << (8 * i);
    return v;
}

} // namespace detail

inline void save_ngram_index(const NGramIndex& index, const std::filesystem::path& dir) {
    std::string out;
    detail::put_u32(out, kIndexMagic);
    detail::put_u32(out, kIndexVersion);
    detail::put_u32(out, static_cast<uint32_t>(index.n));
    detail::put_u32(out, kHashFnv1a64);
    detail::put_u64(out, index.fingerprints.size());
    detail::put_u32(out, static_cast<uint32_t>(index.source_labels.size()));
    for (const auto& label : index.source_labels) {
        detail::put_u32(out, static_cast<uint32_t>(label.size()));
        out += label;
    }
    for (uint64_t fp : index.fingerprints) detail::put_u64(out, fp);
    write_file(dir / kIndexFileName, out);
}

inline NGramIndex load_ngram_index(const std::filesystem::path& dir) {
    auto path = dir / kIndexFileName;
    auto bytes = read_file_bytes(path);
    if (!bytes) throw DecontamError("cannot read n-gram index: " + path.string());
    std::string_view s(*bytes);
    if (s.size() < 24) throw DecontamError("truncated n-gram index: " + path.string());
    size_t pos = 0;
    if (detail::get_u32(s, pos) != kIndexMagic)
        throw DecontamError("bad magic in n-gram index: " + path.string());
    if (detail::get_u32(s, pos) != kIndexVersion)
        throw DecontamError("unsupported n-gram index version: " + path.string());
    NGramIndex index;
    index.n = detail::get_u32(s, pos);
    if (detail::get_u32(s, pos) != kHashFnv1a64)
        throw DecontamError("unsupported hash function in index: " + path.string());
    uint64_t count = detail::get_u64(s, pos);
    uint32_t n_labels = detail::get_u32(s, pos);
    for (uint32_t i = 0; i < n_labels; ++i) {
        if (pos + 4 > s.size()) throw DecontamError("truncated n-gram index: " + path.string());
        uint32_t len = detail::get_u32(s, pos);
        if (pos + len > s.size()) throw DecontamError("truncated n-gram index: " + path.string());
        index.source_labels.emplace_back(s.substr(pos, len));
        pos += len;
    }
    if (pos + count * 8 > s.size())
        throw DecontamError("truncated n-gram index: " + path.string());
    index.fingerprints.reserve(count);
    for (uint64_t i = 0; i < count; ++i) index.fingerprints.push_back(detail::get_u64(s, pos));
    return index;
}

} // namespace repofim
