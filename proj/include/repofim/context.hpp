#pragma once

// Cross-file context packing: score every other file of the snapshot against
// the masked file (identifier-set Jaccard), order by relevance and pack
// greedily into a token budget. Whole files are preferred; the first file
// that does not fit is head-kept/tail-truncated and everything after it is
// dropped.

#include <algorithm>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "repofim/ingest.hpp"
#include "repofim/mask.hpp"
#include "repofim/tokenize.hpp"

namespace repofim {

struct TokenBudget {
    size_t max_total_tokens = 32768;
    size_t headroom_tokens = 512; // reserved for generation
    size_t max_context_tokens = 0;
};

// Derive the context allowance for one task: whatever the total budget
// leaves after the prefix, the suffix and the generation headroom.
inline TokenBudget derive_budget(size_t max_total_tokens, size_t headroom_tokens,
                                 size_t prefix_tokens, size_t suffix_tokens) {
    TokenBudget b;
    b.max_total_tokens = max_total_tokens;
    b.headroom_tokens = headroom_tokens;
    size_t used = prefix_tokens + suffix_tokens + headroom_tokens;
    b.max_context_tokens = used >= max_total_tokens ? 0 : max_total_tokens - used;
    return b;
}

struct ContextEntry {
    std::string path;
    std::string content;
    size_t token_count = 0;
};

struct ContextBundle {
    std::vector<ContextEntry> entries; // descending relevance
    size_t total_tokens = 0;
    TokenBudget budget;
};

namespace detail {

inline std::unordered_set<std::string_view> identifier_set(std::string_view text) {
    std::unordered_set<std::string_view> out;
    size_t i = 0;
    const size_t n = text.size();
    auto is_start = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    };
    auto is_cont = [&](char c) { return is_start(c) || (c >= '0' && c <= '9'); };
    while (i < n) {
        if (is_start(text[i])) {
            size_t start = i;
            while (i < n && is_cont(text[i])) ++i;
            out.insert(text.substr(start, i - start));
        } else {
            ++i;
        }
    }
    return out;
}

inline size_t path_component_distance(std::string_view a, std::string_view b) {
    auto pa = repofim::detail::split_path(a);
    auto pb = repofim::detail::split_path(b);
    size_t common = 0;
    while (common < pa.size() && common < pb.size() && pa[common] == pb[common]) ++common;
    return (pa.size() - common) + (pb.size() - common);
}

} // namespace detail

// Jaccard similarity of the files' identifier sets; 0 when either is empty.
inline double relevance_score(const SourceFile& masked, const SourceFile& candidate) {
    auto a = detail::identifier_set(masked.content);
    auto b = detail::identifier_set(candidate.content);
    if (a.empty() || b.empty()) return 0.0;
    size_t inter = 0;
    for (const auto& id : a)
        if (b.count(id)) ++inter;
    size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

inline ContextBundle rank_and_truncate(const RepoSnapshot& snapshot, const MaskTask& task,
                                       const TokenBudget& budget, const Tokenizer& tokenizer) {
    const SourceFile* masked = snapshot.find(task.file_path);
    if (!masked)
        throw ContractError("task file not in snapshot: " + task.file_path);

    struct Scored {
        const SourceFile* file;
        double score;
        size_t path_distance;
    };
    std::vector<Scored> scored;
    scored.reserve(snapshot.files.size());
    for (const auto& f : snapshot.files) {
        if (f.path == task.file_path) continue;
        scored.push_back({&f, relevance_score(*masked, f),
                          detail::path_component_distance(f.path, task.file_path)});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.path_distance != b.path_distance) return a.path_distance < b.path_distance;
        return a.file->path < b.file->path;
    });

    ContextBundle bundle;
    bundle.budget = budget;
    size_t remaining = budget.max_context_tokens;
    for (const auto& s : scored) {
        size_t tokens = s.file->token_count;
        if (tokens <= remaining) {
            bundle.entries.push_back({s.file->path, s.file->content, tokens});
            bundle.total_tokens += tokens;
            remaining -= tokens;
            continue;
        }
        // First file that does not fit whole: keep its head, drop the rest.
        if (remaining > 0) {
            std::string head = keep_head_tokens(tokenizer, s.file->content, remaining);
            size_t head_tokens = tokenizer.count(head);
            if (head_tokens > 0) {
                bundle.entries.push_back({s.file->path, std::move(head), head_tokens});
                bundle.total_tokens += head_tokens;
            }
        }
        break;
    }
    return bundle;
}

} // namespace repofim
