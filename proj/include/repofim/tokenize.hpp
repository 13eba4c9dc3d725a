#pragma once

// Pluggable token counting. The default "approx" tokenizer splits on
// whitespace and punctuation boundaries: a token is either a maximal run of
// [A-Za-z0-9_] (bytes >= 0x80 count as word bytes so multi-byte characters
// never split) or a single other non-space character. Counts are
// deterministic and model-independent; reports label which tokenizer
// produced them.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "repofim/util.hpp"

namespace repofim {

struct TokenSpan {
    size_t begin = 0;
    size_t end = 0;
};

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::string name() const = 0;
    virtual std::vector<TokenSpan> spans(std::string_view text) const = 0;

    virtual size_t count(std::string_view text) const { return spans(text).size(); }
};

class ApproxTokenizer final : public Tokenizer {
public:
    std::string name() const override { return "approx"; }

    std::vector<TokenSpan> spans(std::string_view text) const override {
        std::vector<TokenSpan> out;
        size_t i = 0;
        const size_t n = text.size();
        while (i < n) {
            char c = text[i];
            if (is_space_char(c)) {
                ++i;
                continue;
            }
            size_t start = i;
            if (is_word_byte(c)) {
                while (i < n && is_word_byte(text[i])) ++i;
            } else {
                ++i;
            }
            out.push_back({start, i});
        }
        return out;
    }

    size_t count(std::string_view text) const override {
        size_t total = 0;
        size_t i = 0;
        const size_t n = text.size();
        while (i < n) {
            char c = text[i];
            if (is_space_char(c)) {
                ++i;
                continue;
            }
            ++total;
            if (is_word_byte(c)) {
                while (i < n && is_word_byte(text[i])) ++i;
            } else {
                ++i;
            }
        }
        return total;
    }

private:
    static bool is_word_byte(char c) {
        unsigned char u = static_cast<unsigned char>(c);
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '_' || u >= 0x80;
    }
};

inline std::shared_ptr<const Tokenizer> make_tokenizer(const std::string& name) {
    if (name == "approx" || name.empty()) return std::make_shared<ApproxTokenizer>();
    throw ConfigError("unknown tokenizer: " + name);
}

// Keep the first `k` tokens of `text` (head), cutting at a token boundary.
inline std::string keep_head_tokens(const Tokenizer& tok, std::string_view text, size_t k) {
    if (k == 0) return {};
    auto sp = tok.spans(text);
    if (sp.size() <= k) return std::string(text);
    return std::string(text.substr(0, sp[k - 1].end));
}

// Keep the last `k` tokens of `text` (tail), cutting at a token boundary.
inline std::string keep_tail_tokens(const Tokenizer& tok, std::string_view text, size_t k) {
    if (k == 0) return {};
    auto sp = tok.spans(text);
    if (sp.size() <= k) return std::string(text);
    size_t begin = sp[sp.size() - k].begin;
    return std::string(text.substr(begin));
}

} // namespace repofim
