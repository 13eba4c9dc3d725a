#pragma once

// Mask carving: enumerate maskable syntax-tree nodes per grammar level and
// split files into (prefix, middle, suffix) tasks, plus the heuristic random
// span/line carvers. Everything here is a pure function of its inputs; a
// fixed seed fully determines each task.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "repofim/syntax.hpp"
#include "repofim/tokenize.hpp"

namespace repofim {

struct CarveError : Error {
    using Error::Error;
};

enum class MaskLevel {
    Expression,
    Statement,
    Function,
    Class,
    RandomSpan,
    RandomSingleLine,
    RandomMultiLine,
};

inline bool is_grammar_level(MaskLevel level) {
    return level == MaskLevel::Expression || level == MaskLevel::Statement ||
           level == MaskLevel::Function || level == MaskLevel::Class;
}

inline std::string to_string(MaskLevel level) {
    switch (level) {
        case MaskLevel::Expression: return "expression";
        case MaskLevel::Statement: return "statement";
        case MaskLevel::Function: return "function";
        case MaskLevel::Class: return "class";
        case MaskLevel::RandomSpan: return "random_span";
        case MaskLevel::RandomSingleLine: return "random_single_line";
        case MaskLevel::RandomMultiLine: return "random_multi_line";
    }
    return "unknown";
}

inline std::optional<MaskLevel> mask_level_from_string(std::string_view s) {
    if (s == "expression") return MaskLevel::Expression;
    if (s == "statement") return MaskLevel::Statement;
    if (s == "function") return MaskLevel::Function;
    if (s == "class") return MaskLevel::Class;
    if (s == "random_span") return MaskLevel::RandomSpan;
    if (s == "random_single_line") return MaskLevel::RandomSingleLine;
    if (s == "random_multi_line") return MaskLevel::RandomMultiLine;
    return std::nullopt;
}

inline const std::vector<MaskLevel>& all_mask_levels() {
    static const std::vector<MaskLevel> levels = {
        MaskLevel::RandomSpan,  MaskLevel::RandomSingleLine, MaskLevel::RandomMultiLine,
        MaskLevel::Expression,  MaskLevel::Statement,        MaskLevel::Function,
        MaskLevel::Class,
    };
    return levels;
}

// The six benchmark categories (class-level masks exist but are excluded
// from the default profile).
inline const std::vector<MaskLevel>& default_benchmark_levels() {
    static const std::vector<MaskLevel> levels = {
        MaskLevel::RandomSpan, MaskLevel::RandomSingleLine, MaskLevel::RandomMultiLine,
        MaskLevel::Expression, MaskLevel::Statement,        MaskLevel::Function,
    };
    return levels;
}

struct MaskCandidate {
    ByteRange byte_range;
    MaskLevel level = MaskLevel::Expression;
    std::string node_kind; // empty for heuristic levels
};

struct MaskTask {
    std::string task_id;
    std::string repo_id;
    std::string file_path;
    MaskLevel level = MaskLevel::Expression;
    std::string prefix;
    std::string middle;
    std::string suffix;
    LanguageTag language;
    uint64_t seed = 0;
    size_t middle_token_count = 0;
    std::string node_kind;

    std::string original_content() const { return prefix + middle + suffix; }
};

// Whether function-level masks cover only the body or the whole definition.
enum class FunctionMaskMode { BodyOnly, FullDefinition };

struct CarveConstraints {
    size_t min_middle_tokens = 2;
    size_t max_middle_tokens = 256;
    FunctionMaskMode function_mode = FunctionMaskMode::BodyOnly;
    // node kinds allowed per (language key, level); filled with defaults for
    // python when left empty.
    std::map<std::string, std::map<MaskLevel, std::vector<std::string>>> whitelists;

    const std::vector<std::string>& whitelist_for(const LanguageTag& lang, MaskLevel level) const {
        static const std::vector<std::string> empty;
        auto lit = whitelists.find(to_string(lang));
        if (lit == whitelists.end()) return empty;
        auto wit = lit->second.find(level);
        return wit == lit->second.end() ? empty : wit->second;
    }
};

inline CarveConstraints default_carve_constraints() {
    CarveConstraints c;
    c.whitelists["python"] = {
        {MaskLevel::Expression,
         {"binary_operator", "call", "comparison_operator", "boolean_operator",
          "conditional_expression"}},
        {MaskLevel::Statement,
         {"expression_statement", "return_statement", "if_statement", "for_statement",
          "while_statement", "assignment"}},
        {MaskLevel::Function, {"function_definition"}},
        {MaskLevel::Class, {"class_definition"}},
    };
    return c;
}

inline std::string make_task_id(std::string_view repo_id, std::string_view path, ByteRange range,
                                MaskLevel level) {
    uint64_t h = fnv1a64(repo_id);
    h = hash_combine(h, fnv1a64(path));
    h = hash_combine(h, range.begin);
    h = hash_combine(h, range.end);
    h = hash_combine(h, static_cast<uint64_t>(level));
    return to_hex16(h);
}

// ---------------------------------------------------------------------------
// Grammar-level candidate enumeration

// All whitelisted nodes for `level` whose middle obeys the token constraints
// and that stay clear of parse-error regions. Ordered by start offset.
inline std::vector<MaskCandidate> enumerate_candidates(const SyntaxTree& tree,
                                                       const SourceFile& file, MaskLevel level,
                                                       const CarveConstraints& constraints,
                                                       const Tokenizer& tokenizer) {
    if (!is_grammar_level(level))
        throw ContractError("enumerate_candidates requires a grammar level, got " +
                            to_string(level));
    const auto& whitelist = constraints.whitelist_for(file.language, level);
    std::vector<MaskCandidate> out;
    if (whitelist.empty() || !tree.root) return out;

    bool body_only = (level == MaskLevel::Class) ||
                     (level == MaskLevel::Function &&
                      constraints.function_mode == FunctionMaskMode::BodyOnly);

    visit_nodes(*tree.root, [&](const SyntaxNode& node) {
        if (std::find(whitelist.begin(), whitelist.end(), node.kind) == whitelist.end()) return;
        ByteRange range = node.range();
        if (body_only) {
            if (!node.has_body) return;
            range = node.body_range();
        }
        if (range.begin >= range.end || range.end > file.content.size()) return;
        for (const auto& err : tree.error_ranges)
            if (range.overlaps(err)) return;
        std::string_view middle =
            std::string_view(file.content).substr(range.begin, range.size());
        if (all_whitespace(middle)) return;
        size_t tokens = tokenizer.count(middle);
        if (tokens < constraints.min_middle_tokens || tokens > constraints.max_middle_tokens)
            return;
        out.push_back({range, level, node.kind});
    });

    std::sort(out.begin(), out.end(), [](const MaskCandidate& a, const MaskCandidate& b) {
        if (a.byte_range.begin != b.byte_range.begin) return a.byte_range.begin < b.byte_range.begin;
        if (a.byte_range.end != b.byte_range.end) return a.byte_range.end < b.byte_range.end;
        return a.node_kind < b.node_kind;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Carving

inline MaskTask carve_task(const SourceFile& file, const MaskCandidate& candidate, uint64_t seed,
                           std::string_view repo_id, const Tokenizer& tokenizer) {
    const auto& content = file.content;
    const ByteRange r = candidate.byte_range;
    if (r.begin >= r.end || r.end > content.size())
        throw CarveError("candidate range out of bounds for " + file.path);
    if (!is_utf8_boundary(content, r.begin) || !is_utf8_boundary(content, r.end))
        throw CarveError("candidate range splits a character in " + file.path);

    MaskTask task;
    task.repo_id = std::string(repo_id);
    task.file_path = file.path;
    task.level = candidate.level;
    task.prefix = content.substr(0, r.begin);
    task.middle = content.substr(r.begin, r.size());
    task.suffix = content.substr(r.end);
    task.language = file.language;
    task.seed = seed;
    task.node_kind = candidate.node_kind;
    if (all_whitespace(task.middle))
        throw CarveError("whitespace-only middle in " + file.path);
    task.middle_token_count = tokenizer.count(task.middle);
    task.task_id = make_task_id(repo_id, file.path, r, candidate.level);
    return task;
}

namespace detail {

// A line is maskable on its own if it has content beyond delimiters.
inline bool line_is_delimiter_only(std::string_view line) {
    for (char c : line) {
        if (is_space_char(c)) continue;
        if (std::string_view("()[]{},:;").find(c) == std::string_view::npos) return false;
    }
    return true;
}

} // namespace detail

// Random line / span carvers. Returns nullopt when no position satisfies the
// constraints (NoCandidate); the caller skips the file.
inline std::optional<MaskTask> carve_random(const SourceFile& file, MaskLevel level,
                                            const CarveConstraints& constraints, uint64_t seed,
                                            std::string_view repo_id, const Tokenizer& tokenizer) {
    const auto& content = file.content;
    Rng rng(seed);

    auto finish = [&](ByteRange range) -> std::optional<MaskTask> {
        MaskCandidate cand{range, level, ""};
        return carve_task(file, cand, seed, repo_id, tokenizer);
    };

    if (level == MaskLevel::RandomSingleLine) {
        auto lines = line_spans(content);
        std::vector<ByteRange> eligible;
        for (auto [b, e] : lines) {
            std::string_view line = std::string_view(content).substr(b, e - b);
            if (all_whitespace(line) || detail::line_is_delimiter_only(line)) continue;
            size_t tokens = tokenizer.count(line);
            if (tokens < constraints.min_middle_tokens || tokens > constraints.max_middle_tokens)
                continue;
            eligible.push_back({b, e});
        }
        if (eligible.empty()) return std::nullopt;
        return finish(eligible[rng.below(eligible.size())]);
    }

    if (level == MaskLevel::RandomMultiLine) {
        auto lines = line_spans(content);
        if (lines.size() < 2) return std::nullopt;
        std::vector<ByteRange> eligible;
        for (size_t i = 0; i < lines.size(); ++i) {
            for (size_t len = 2; len <= 8 && i + len <= lines.size(); ++len) {
                ByteRange range{lines[i].first, lines[i + len - 1].second};
                std::string_view block =
                    std::string_view(content).substr(range.begin, range.size());
                if (all_whitespace(block)) continue;
                size_t tokens = tokenizer.count(block);
                if (tokens < constraints.min_middle_tokens ||
                    tokens > constraints.max_middle_tokens)
                    continue;
                eligible.push_back(range);
            }
        }
        if (eligible.empty()) return std::nullopt;
        return finish(eligible[rng.below(eligible.size())]);
    }

    if (level == MaskLevel::RandomSpan) {
        auto spans = tokenizer.spans(content);
        const size_t n_tokens = spans.size();
        if (n_tokens == 0) return std::nullopt;

        auto at_line_start = [&](size_t pos) { return pos == 0 || content[pos - 1] == '\n'; };
        auto at_line_end = [&](size_t pos) { return pos == content.size() || content[pos] == '\n'; };

        // ends_at_line_end[j]: prefix count over tokens ending a line; used to
        // subtract fully line-aligned windows in O(1) per start.
        std::vector<size_t> line_end_prefix(n_tokens + 1, 0);
        for (size_t j = 0; j < n_tokens; ++j)
            line_end_prefix[j + 1] = line_end_prefix[j] + (at_line_end(spans[j].end) ? 1 : 0);

        const size_t min_len = std::max<size_t>(constraints.min_middle_tokens, 1);
        uint64_t total = 0;
        auto window_count = [&](size_t i) -> uint64_t {
            size_t max_len = std::min(constraints.max_middle_tokens, n_tokens - i);
            if (max_len < min_len) return 0;
            uint64_t base = max_len - min_len + 1;
            if (!at_line_start(spans[i].begin)) return base;
            size_t jlo = i + min_len - 1, jhi = i + max_len - 1;
            uint64_t aligned = line_end_prefix[jhi + 1] - line_end_prefix[jlo];
            return base - aligned;
        };
        for (size_t i = 0; i < n_tokens; ++i) total += window_count(i);
        if (total == 0) return std::nullopt;

        uint64_t pick = rng.below(total);
        for (size_t i = 0; i < n_tokens; ++i) {
            uint64_t here = window_count(i);
            if (pick >= here) {
                pick -= here;
                continue;
            }
            size_t max_len = std::min(constraints.max_middle_tokens, n_tokens - i);
            for (size_t len = min_len; len <= max_len; ++len) {
                size_t j = i + len - 1;
                if (at_line_start(spans[i].begin) && at_line_end(spans[j].end)) continue;
                if (pick == 0) return finish({spans[i].begin, spans[j].end});
                --pick;
            }
            break; // unreachable if the counts are consistent
        }
        return std::nullopt;
    }

    throw ContractError("carve_random requires a heuristic level, got " + to_string(level));
}

// Re-locate the syntax node backing a grammar-level task; used by the
// soundness property checks.
inline bool range_has_whitelisted_node(const SyntaxTree& tree, ByteRange range, MaskLevel level,
                                       const LanguageTag& lang,
                                       const CarveConstraints& constraints) {
    const auto& whitelist = constraints.whitelist_for(lang, level);
    bool body_only = (level == MaskLevel::Class) ||
                     (level == MaskLevel::Function &&
                      constraints.function_mode == FunctionMaskMode::BodyOnly);
    bool found = false;
    if (!tree.root) return false;
    visit_nodes(*tree.root, [&](const SyntaxNode& node) {
        if (found) return;
        if (std::find(whitelist.begin(), whitelist.end(), node.kind) == whitelist.end()) return;
        ByteRange node_range = body_only ? node.body_range() : node.range();
        if (body_only && !node.has_body) return;
        if (node_range == range) found = true;
    });
    return found;
}

} // namespace repofim
