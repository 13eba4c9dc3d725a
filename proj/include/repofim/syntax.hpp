#pragma once

// Grammar layer: parse a source file into a concrete syntax tree whose nodes
// carry byte-exact spans. Only Python ships in v1; grammars register per
// language so other languages can slot in behind the same interface.
//
// The parser is error-tolerant: malformed regions become error ranges on the
// tree instead of aborting, and mask enumeration skips anything overlapping
// them. f-string interiors are treated as opaque string tokens.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "repofim/ingest.hpp"
#include "repofim/util.hpp"

namespace repofim {

struct UnsupportedLanguageError : Error {
    using Error::Error;
};

struct ByteRange {
    size_t begin = 0;
    size_t end = 0;

    bool operator==(const ByteRange& rhs) const { return begin == rhs.begin && end == rhs.end; }
    bool overlaps(const ByteRange& rhs) const { return begin < rhs.end && rhs.begin < end; }
    size_t size() const { return end - begin; }
};

struct SyntaxNode {
    std::string kind;
    size_t begin = 0;
    size_t end = 0;
    std::vector<std::unique_ptr<SyntaxNode>> children;
    // Suite span for definition nodes (function_definition, class_definition).
    bool has_body = false;
    size_t body_begin = 0;
    size_t body_end = 0;

    ByteRange range() const { return {begin, end}; }
    ByteRange body_range() const { return {body_begin, body_end}; }
};

struct SyntaxTree {
    std::unique_ptr<SyntaxNode> root;
    std::vector<ByteRange> error_ranges;

    bool has_errors() const { return !error_ranges.empty(); }
};

inline void visit_nodes(const SyntaxNode& node, const std::function<void(const SyntaxNode&)>& fn) {
    fn(node);
    for (const auto& child : node.children) visit_nodes(*child, fn);
}

class Grammar {
public:
    virtual ~Grammar() = default;
    virtual std::string name() const = 0;
    virtual SyntaxTree parse(std::string_view source) const = 0;
};

// ---------------------------------------------------------------------------
// Python lexer

namespace py {

enum class Tok : uint8_t {
    Ident,
    Keyword,
    Number,
    Str,
    Op,
    Newline,
    Indent,
    Dedent,
    End,
    Bad,
};

struct Token {
    Tok kind = Tok::End;
    size_t begin = 0;
    size_t end = 0;
    std::string_view text;
};

inline const std::unordered_set<std::string_view>& keywords() {
    static const std::unordered_set<std::string_view> kw = {
        "False",  "None",   "True",  "and",    "as",   "assert", "async", "await",
        "break",  "class",  "continue", "def", "del",  "elif",   "else",  "except",
        "finally", "for",   "from",  "global", "if",   "import", "in",    "is",
        "lambda", "nonlocal", "not", "or",     "pass", "raise",  "return", "try",
        "while",  "with",   "yield",
    };
    return kw;
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        indents_.push_back(0);
        while (pos_ < src_.size()) {
            if (at_line_start_ && depth_ == 0) {
                if (!start_logical_line()) break;
                continue;
            }
            lex_one();
        }
        // Close the final logical line and any open blocks.
        if (!at_line_start_ && depth_ == 0) push(Tok::Newline, pos_, pos_);
        while (indents_.size() > 1) {
            indents_.pop_back();
            push(Tok::Dedent, pos_, pos_);
        }
        push(Tok::End, pos_, pos_);
        return std::move(tokens_);
    }

private:
    std::string_view src_;
    size_t pos_ = 0;
    int depth_ = 0; // bracket nesting
    bool at_line_start_ = true;
    std::vector<size_t> indents_;
    std::vector<Token> tokens_;

    void push(Tok kind, size_t begin, size_t end) {
        tokens_.push_back({kind, begin, end, src_.substr(begin, end - begin)});
    }

    char peek(size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    // Measure indentation, skip blank/comment-only lines, emit Indent/Dedent.
    // Returns false at end of input.
    bool start_logical_line() {
        while (pos_ < src_.size()) {
            size_t line_begin = pos_;
            size_t width = 0;
            while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t')) {
                width += src_[pos_] == '\t' ? 8 - (width % 8) : 1;
                ++pos_;
            }
            if (pos_ >= src_.size()) return false;
            if (src_[pos_] == '\n') {
                ++pos_; // blank line
                continue;
            }
            if (src_[pos_] == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
                if (pos_ < src_.size()) ++pos_;
                continue;
            }
            if (src_[pos_] == '\\' && peek(1) == '\n') {
                pos_ += 2; // continuation straight from the indent
                continue;
            }
            size_t mark = pos_ > line_begin ? pos_ : line_begin;
            if (width > indents_.back()) {
                indents_.push_back(width);
                push(Tok::Indent, mark, mark);
            } else {
                while (width < indents_.back()) {
                    indents_.pop_back();
                    push(Tok::Dedent, mark, mark);
                }
                if (width != indents_.back()) {
                    // Inconsistent dedent; recover by opening a block here.
                    indents_.push_back(width);
                    push(Tok::Indent, mark, mark);
                }
            }
            at_line_start_ = false;
            return true;
        }
        return false;
    }

    void lex_one() {
        char c = peek();
        if (c == ' ' || c == '\t' || c == '\f') {
            ++pos_;
            return;
        }
        if (c == '\\' && peek(1) == '\n') {
            pos_ += 2;
            return;
        }
        if (c == '#') {
            while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            return;
        }
        if (c == '\n') {
            if (depth_ > 0) {
                ++pos_;
            } else {
                push(Tok::Newline, pos_, pos_ + 1);
                ++pos_;
                at_line_start_ = true;
            }
            return;
        }
        if (is_ident_start(c)) {
            lex_word();
            return;
        }
        if (is_digit(c) || (c == '.' && is_digit(peek(1)))) {
            lex_number();
            return;
        }
        if (c == '\'' || c == '"') {
            lex_string(pos_);
            return;
        }
        lex_operator();
    }

    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_ident_start(char c) {
        unsigned char u = static_cast<unsigned char>(c);
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || u >= 0x80;
    }
    static bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

    void lex_word() {
        size_t start = pos_;
        while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
        std::string_view word = src_.substr(start, pos_ - start);
        // String prefixes: r, b, u, f and two-letter combinations.
        if (word.size() <= 2 && (peek() == '\'' || peek() == '"')) {
            bool prefix = true;
            for (char pc : word) {
                char lc = pc >= 'A' && pc <= 'Z' ? static_cast<char>(pc - 'A' + 'a') : pc;
                if (lc != 'r' && lc != 'b' && lc != 'u' && lc != 'f') prefix = false;
            }
            if (prefix) {
                lex_string(start);
                return;
            }
        }
        push(keywords().count(word) ? Tok::Keyword : Tok::Ident, start, pos_);
    }

    void lex_number() {
        size_t start = pos_;
        bool hex = peek() == '0' && (peek(1) == 'x' || peek(1) == 'X');
        ++pos_;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (is_ident_char(c) || c == '.') {
                ++pos_;
            } else if ((c == '+' || c == '-') && !hex &&
                       (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E')) {
                ++pos_;
            } else {
                break;
            }
        }
        push(Tok::Number, start, pos_);
    }

    // `start` is the prefix start (may precede the quotes).
    void lex_string(size_t start) {
        pos_ = start;
        while (pos_ < src_.size() && src_[pos_] != '\'' && src_[pos_] != '"') ++pos_;
        if (pos_ >= src_.size()) {
            push(Tok::Bad, start, pos_);
            return;
        }
        char quote = src_[pos_];
        bool triple = peek(1) == quote && peek(2) == quote;
        pos_ += triple ? 3 : 1;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\\' && pos_ + 1 < src_.size()) {
                pos_ += 2;
                continue;
            }
            if (!triple && c == '\n') {
                push(Tok::Bad, start, pos_); // unterminated single-quoted string
                return;
            }
            if (c == quote) {
                if (!triple) {
                    ++pos_;
                    push(Tok::Str, start, pos_);
                    return;
                }
                if (peek(1) == quote && peek(2) == quote) {
                    pos_ += 3;
                    push(Tok::Str, start, pos_);
                    return;
                }
            }
            ++pos_;
        }
        push(Tok::Bad, start, pos_); // unterminated at EOF
    }

    void lex_operator() {
        static const std::string_view multi[] = {
            "**=", "//=", ">>=", "<<=", "...", "!=", ">=", "<=", "==", "->", ":=",
            "+=",  "-=",  "*=",  "/=",  "%=",  "@=", "&=", "|=", "^=", "**", "//",
            "<<",  ">>",
        };
        static const std::string_view singles = "+-*/%@&|^~<>=()[]{},:.;";
        for (auto op : multi) {
            if (src_.compare(pos_, op.size(), op) == 0) {
                push(Tok::Op, pos_, pos_ + op.size());
                pos_ += op.size();
                return;
            }
        }
        char c = peek();
        if (singles.find(c) != std::string_view::npos) {
            if (c == '(' || c == '[' || c == '{') ++depth_;
            if ((c == ')' || c == ']' || c == '}') && depth_ > 0) --depth_;
            push(Tok::Op, pos_, pos_ + 1);
            ++pos_;
            return;
        }
        push(Tok::Bad, pos_, pos_ + 1);
        ++pos_;
    }
};

// ---------------------------------------------------------------------------
// Python parser (recursive descent, error tolerant)

class Parser {
public:
    Parser(std::string_view src, std::vector<Token> tokens)
        : src_(src), toks_(std::move(tokens)) {}

    SyntaxTree run() {
        SyntaxTree tree;
        tree.root = make("module", 0, src_.size());
        while (!at(Tok::End)) {
            size_t before = pos_;
            if (at(Tok::Newline) || at(Tok::Dedent)) {
                advance();
                continue;
            }
            if (at(Tok::Indent)) {
                // Unexpected indentation: swallow the block as an error.
                mark_error(cur().begin, skip_block());
                continue;
            }
            parse_statement_into(*tree.root);
            if (pos_ == before) {
                mark_error(cur().begin, cur().end);
                advance();
            }
        }
        tree.error_ranges = std::move(errors_);
        return tree;
    }

private:
    std::string_view src_;
    std::vector<Token> toks_;
    size_t pos_ = 0;
    std::vector<ByteRange> errors_;
    int guard_depth_ = 0;

    using NodePtr = std::unique_ptr<SyntaxNode>;

    // --- token helpers ---

    const Token& cur() const { return toks_[pos_]; }
    const Token& peek(size_t ahead = 1) const {
        size_t i = pos_ + ahead;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    bool at(Tok k) const { return cur().kind == k; }
    bool at_kw(std::string_view kw) const { return cur().kind == Tok::Keyword && cur().text == kw; }
    bool at_op(std::string_view op) const { return cur().kind == Tok::Op && cur().text == op; }
    void advance() {
        if (pos_ + 1 < toks_.size()) ++pos_;
    }
    bool eat_op(std::string_view op) {
        if (at_op(op)) {
            advance();
            return true;
        }
        return false;
    }
    bool eat_kw(std::string_view kw) {
        if (at_kw(kw)) {
            advance();
            return true;
        }
        return false;
    }

    static NodePtr make(std::string kind, size_t begin, size_t end) {
        auto n = std::make_unique<SyntaxNode>();
        n->kind = std::move(kind);
        n->begin = begin;
        n->end = end;
        return n;
    }

    void mark_error(size_t begin, size_t end) {
        if (end > begin) errors_.push_back({begin, end});
    }

    // Skip to (and past) the next statement boundary; returns the byte offset
    // reached. Consumes an indented block if one follows immediately.
    size_t skip_to_newline() {
        size_t end = cur().begin;
        while (!at(Tok::End) && !at(Tok::Newline) && !at(Tok::Dedent)) {
            end = cur().end;
            advance();
        }
        if (at(Tok::Newline)) {
            end = cur().begin;
            advance();
        }
        if (at(Tok::Indent)) end = skip_block();
        return end;
    }

    // Consume a balanced Indent...Dedent region; returns end offset.
    size_t skip_block() {
        size_t end = cur().begin;
        int depth = 0;
        do {
            if (at(Tok::Indent)) ++depth;
            if (at(Tok::Dedent)) --depth;
            if (at(Tok::End)) break;
            end = cur().end > end ? cur().end : end;
            advance();
        } while (depth > 0);
        return end;
    }

    // --- statements ---

    void parse_statement_into(SyntaxNode& parent) {
        if (guard_depth_ > 200) { // pathological nesting; bail out as error
            mark_error(cur().begin, skip_to_newline());
            return;
        }
        if (at_kw("if")) {
            parent.children.push_back(parse_if());
        } else if (at_kw("while")) {
            parent.children.push_back(parse_while());
        } else if (at_kw("for")) {
            parent.children.push_back(parse_for(cur().begin));
        } else if (at_kw("try")) {
            parent.children.push_back(parse_try());
        } else if (at_kw("with")) {
            parent.children.push_back(parse_with(cur().begin));
        } else if (at_kw("def")) {
            parent.children.push_back(parse_funcdef(cur().begin));
        } else if (at_kw("class")) {
            parent.children.push_back(parse_classdef());
        } else if (at_kw("async")) {
            size_t start = cur().begin;
            advance();
            if (at_kw("def"))
                parent.children.push_back(parse_funcdef(start));
            else if (at_kw("for"))
                parent.children.push_back(parse_for(start));
            else if (at_kw("with"))
                parent.children.push_back(parse_with(start));
            else
                mark_error(start, skip_to_newline());
        } else if (at_op("@")) {
            parent.children.push_back(parse_decorated());
        } else {
            parse_simple_line_into(parent);
        }
    }

    // One physical line of ';'-separated simple statements.
    void parse_simple_line_into(SyntaxNode& parent) {
        while (true) {
            size_t before = pos_;
            parent.children.push_back(parse_small_stmt());
            if (pos_ == before) {
                mark_error(cur().begin, cur().end);
                advance();
            }
            if (eat_op(";")) {
                if (at(Tok::Newline) || at(Tok::End) || at(Tok::Dedent)) break;
                continue;
            }
            break;
        }
        if (at(Tok::Newline)) {
            advance();
        } else if (!at(Tok::End) && !at(Tok::Dedent)) {
            mark_error(cur().begin, skip_to_newline());
        }
    }

    NodePtr parse_small_stmt() {
        size_t start = cur().begin;
        if (at_kw("return")) {
            size_t end = cur().end;
            advance();
            auto node = make("return_statement", start, end);
            if (!stmt_end()) {
                auto value = parse_expression_list();
                node->end = value->end;
                node->children.push_back(std::move(value));
            }
            return node;
        }
        if (at_kw("pass") || at_kw("break") || at_kw("continue")) {
            std::string kind = std::string(cur().text) + "_statement";
            auto node = make(std::move(kind), start, cur().end);
            advance();
            return node;
        }
        if (at_kw("import")) return parse_token_run("import_statement");
        if (at_kw("from")) return parse_token_run("import_from_statement");
        if (at_kw("global")) return parse_token_run("global_statement");
        if (at_kw("nonlocal")) return parse_token_run("nonlocal_statement");
        if (at_kw("raise")) {
            size_t end = cur().end;
            advance();
            auto node = make("raise_statement", start, end);
            if (!stmt_end()) {
                auto value = parse_expression();
                node->end = value->end;
                node->children.push_back(std::move(value));
                if (at_kw("from")) {
                    advance();
                    auto cause = parse_expression();
                    node->end = cause->end;
                    node->children.push_back(std::move(cause));
                }
            }
            return node;
        }
        if (at_kw("del")) {
            advance();
            auto targets = parse_expression_list();
            auto node = make("delete_statement", start, targets->end);
            node->children.push_back(std::move(targets));
            return node;
        }
        if (at_kw("assert")) {
            advance();
            auto cond = parse_expression();
            auto node = make("assert_statement", start, cond->end);
            node->children.push_back(std::move(cond));
            if (eat_op(",")) {
                auto msg = parse_expression();
                node->end = msg->end;
                node->children.push_back(std::move(msg));
            }
            return node;
        }
        if (at_kw("yield")) {
            auto value = parse_yield();
            auto node = make("expression_statement", value->begin, value->end);
            node->children.push_back(std::move(value));
            return node;
        }
        return parse_expr_or_assignment();
    }

    bool stmt_end() const {
        return at(Tok::Newline) || at(Tok::End) || at(Tok::Dedent) || at_op(";");
    }

    // Consume raw tokens through the end of the simple statement. Used for
    // import-like statements whose internals we do not model.
    NodePtr parse_token_run(std::string kind) {
        size_t start = cur().begin;
        size_t end = cur().end;
        advance();
        while (!stmt_end()) {
            end = cur().end;
            advance();
        }
        return make(std::move(kind), start, end);
    }

    NodePtr parse_expr_or_assignment() {
        auto first = parse_expression_list();
        size_t start = first->begin;

        static const std::string_view aug_ops[] = {"+=", "-=", "*=",  "/=",  "//=", "%=",
                                                   "@=", "&=", "|=",  "^=",  ">>=", "<<=",
                                                   "**="};
        bool is_aug = false;
        for (auto op : aug_ops)
            if (at_op(op)) is_aug = true;

        if (is_aug) {
            advance();
            auto rhs = parse_rhs_value();
            auto node = make("assignment", start, rhs->end);
            node->children.push_back(std::move(first));
            node->children.push_back(std::move(rhs));
            return node;
        }
        if (at_op(":") ) {
            // Annotated assignment: target ':' type ['=' value]
            advance();
            auto anno = parse_expression();
            auto node = make("assignment", start, anno->end);
            node->children.push_back(std::move(first));
            node->children.push_back(std::move(anno));
            if (eat_op("=")) {
                auto value = parse_rhs_value();
                node->end = value->end;
                node->children.push_back(std::move(value));
            }
            return node;
        }
        if (at_op("=")) {
            auto node = make("assignment", start, first->end);
            node->children.push_back(std::move(first));
            while (eat_op("=")) {
                auto value = parse_rhs_value();
                node->end = value->end;
                node->children.push_back(std::move(value));
            }
            return node;
        }
        auto node = make("expression_statement", first->begin, first->end);
        node->children.push_back(std::move(first));
        return node;
    }

    NodePtr parse_rhs_value() {
        if (at_kw("yield")) return parse_yield();
        return parse_expression_list();
    }

    NodePtr parse_yield() {
        size_t start = cur().begin;
        size_t end = cur().end;
        advance();
        auto node = make("yield", start, end);
        if (at_kw("from")) {
            advance();
            auto value = parse_expression();
            node->end = value->end;
            node->children.push_back(std::move(value));
        } else if (!stmt_end() && !at_op(")") && !at_op("]") && !at_op("}") && !at_op(":")) {
            auto value = parse_expression_list();
            node->end = value->end;
            node->children.push_back(std::move(value));
        }
        return node;
    }

    // --- compound statements ---

    NodePtr parse_if() {
        size_t start = cur().begin;
        advance();
        auto node = make("if_statement", start, start);
        parse_cond_suite_into(*node);
        while (at_kw("elif")) {
            advance();
            parse_cond_suite_into(*node);
        }
        if (at_kw("else")) {
            advance();
            parse_bare_suite_into(*node);
        }
        return node;
    }

    NodePtr parse_while() {
        size_t start = cur().begin;
        advance();
        auto node = make("while_statement", start, start);
        parse_cond_suite_into(*node);
        if (at_kw("else")) {
            advance();
            parse_bare_suite_into(*node);
        }
        return node;
    }

    NodePtr parse_for(size_t start) {
        advance(); // 'for'
        auto node = make("for_statement", start, start);
        auto target = parse_target_list();
        node->children.push_back(std::move(target));
        if (!eat_kw("in")) {
            node->end = skip_to_newline();
            mark_error(start, node->end);
            return node;
        }
        auto iter = parse_expression_list();
        node->children.push_back(std::move(iter));
        parse_colon_suite_into(*node, start);
        if (at_kw("else")) {
            advance();
            parse_bare_suite_into(*node);
        }
        return node;
    }

    NodePtr parse_try() {
        size_t start = cur().begin;
        advance();
        auto node = make("try_statement", start, start);
        parse_colon_suite_into(*node, start);
        while (at_kw("except")) {
            advance();
            if (!at_op(":")) {
                eat_op("*"); // tolerate except* groups
                auto exc = parse_expression();
                node->children.push_back(std::move(exc));
                if (eat_kw("as") && at(Tok::Ident)) advance();
            }
            parse_colon_suite_into(*node, start);
        }
        if (at_kw("else")) {
            advance();
            parse_bare_suite_into(*node);
        }
        if (at_kw("finally")) {
            advance();
            parse_bare_suite_into(*node);
        }
        return node;
    }

    NodePtr parse_with(size_t start) {
        advance(); // 'with'
        auto node = make("with_statement", start, start);
        while (true) {
            auto item = parse_expression();
            node->children.push_back(std::move(item));
            if (eat_kw("as")) {
                auto target = parse_target();
                node->children.push_back(std::move(target));
            }
            if (!eat_op(",")) break;
        }
        parse_colon_suite_into(*node, start);
        return node;
    }

    NodePtr parse_funcdef(size_t start) {
        advance(); // 'def'
        auto node = make("function_definition", start, start);
        if (at(Tok::Ident)) advance(); // name
        if (at_op("(")) {
            consume_balanced();
        } else {
            node->end = skip_to_newline();
            mark_error(start, node->end);
            return node;
        }
        if (eat_op("->")) {
            auto ret = parse_expression();
            node->children.push_back(std::move(ret));
        }
        auto* block = parse_colon_suite_into(*node, start);
        if (block) {
            node->has_body = true;
            node->body_begin = block->begin;
            node->body_end = block->end;
        }
        return node;
    }

    NodePtr parse_classdef() {
        size_t start = cur().begin;
        advance(); // 'class'
        auto node = make("class_definition", start, start);
        if (at(Tok::Ident)) advance();
        if (at_op("(")) consume_balanced();
        auto* block = parse_colon_suite_into(*node, start);
        if (block) {
            node->has_body = true;
            node->body_begin = block->begin;
            node->body_end = block->end;
        }
        return node;
    }

    NodePtr parse_decorated() {
        size_t start = cur().begin;
        auto node = make("decorated_definition", start, start);
        while (at_op("@")) {
            size_t deco_start = cur().begin;
            advance();
            auto expr = parse_expression();
            auto deco = make("decorator", deco_start, expr->end);
            deco->children.push_back(std::move(expr));
            node->children.push_back(std::move(deco));
            if (at(Tok::Newline)) advance();
        }
        if (at_kw("def") || at_kw("class") || at_kw("async")) {
            size_t before = node->children.size();
            parse_statement_into(*node);
            if (node->children.size() > before) {
                node->end = node->children.back()->end;
                return node;
            }
        }
        node->end = skip_to_newline();
        mark_error(start, node->end);
        return node;
    }

    // condition ':' suite — for if/elif/while.
    void parse_cond_suite_into(SyntaxNode& node) {
        auto cond = parse_expression();
        node.children.push_back(std::move(cond));
        parse_colon_suite_into(node, node.begin);
    }

    void parse_bare_suite_into(SyntaxNode& node) { parse_colon_suite_into(node, node.begin); }

    // Expects ':' then a suite; extends `node.end`. Returns the block node
    // (owned by `node`) or nullptr on malformed input.
    SyntaxNode* parse_colon_suite_into(SyntaxNode& node, size_t stmt_start) {
        if (!eat_op(":")) {
            node.end = skip_to_newline();
            mark_error(stmt_start, node.end);
            return nullptr;
        }
        auto block = parse_suite();
        if (!block) {
            node.end = cur().begin > node.end ? cur().begin : node.end;
            mark_error(stmt_start, node.end);
            return nullptr;
        }
        node.end = (*block)->end > node.end ? (*block)->end : node.end;
        node.children.push_back(std::move(*block));
        return node.children.back().get();
    }

    // A suite: inline simple statements, or NEWLINE INDENT stmts DEDENT.
    std::optional<NodePtr> parse_suite() {
        ++guard_depth_;
        struct Guard {
            int& d;
            ~Guard() { --d; }
        } guard{guard_depth_};

        if (!at(Tok::Newline)) {
            // Inline suite on the same line.
            if (at(Tok::End) || at(Tok::Dedent)) return std::nullopt;
            auto block = make("block", cur().begin, cur().begin);
            parse_simple_line_into(*block);
            if (block->children.empty()) return std::nullopt;
            block->begin = block->children.front()->begin;
            block->end = block->children.back()->end;
            return block;
        }
        advance(); // newline
        if (!at(Tok::Indent)) return std::nullopt;
        advance();
        auto block = make("block", cur().begin, cur().begin);
        while (!at(Tok::Dedent) && !at(Tok::End)) {
            size_t before = pos_;
            if (at(Tok::Newline)) {
                advance();
                continue;
            }
            if (at(Tok::Indent)) {
                mark_error(cur().begin, skip_block());
                continue;
            }
            parse_statement_into(*block);
            if (pos_ == before) {
                mark_error(cur().begin, cur().end);
                advance();
            }
        }
        if (at(Tok::Dedent)) advance();
        if (block->children.empty()) return std::nullopt;
        block->begin = block->children.front()->begin;
        block->end = block->children.back()->end;
        return block;
    }

    // --- targets (no comparison operators, so 'in' is not consumed) ---

    NodePtr parse_target_list() {
        auto first = parse_target();
        if (!at_op(",")) return first;
        auto node = make("expression_list", first->begin, first->end);
        node->children.push_back(std::move(first));
        while (eat_op(",")) {
            if (at_kw("in") || at_op("=") || at(Tok::Newline) || at_op(":")) break;
            auto next = parse_target();
            node->end = next->end;
            node->children.push_back(std::move(next));
        }
        return node;
    }

    NodePtr parse_target() {
        if (at_op("*")) {
            size_t start = cur().begin;
            advance();
            auto inner = parse_target();
            auto node = make("starred", start, inner->end);
            node->children.push_back(std::move(inner));
            return node;
        }
        return parse_postfix();
    }

    // --- expressions ---

    NodePtr parse_expression_list() {
        auto first = parse_expression();
        if (!at_op(",")) return first;
        auto node = make("expression_list", first->begin, first->end);
        node->children.push_back(std::move(first));
        while (eat_op(",")) {
            if (!starts_expression()) break; // trailing comma
            auto next = parse_expression();
            node->end = next->end;
            node->children.push_back(std::move(next));
        }
        return node;
    }

    bool starts_expression() const {
        switch (cur().kind) {
            case Tok::Ident:
            case Tok::Number:
            case Tok::Str:
                return true;
            case Tok::Keyword:
                return cur().text == "not" || cur().text == "lambda" || cur().text == "await" ||
                       cur().text == "None" || cur().text == "True" || cur().text == "False" ||
                       cur().text == "yield";
            case Tok::Op: {
                auto t = cur().text;
                return t == "(" || t == "[" || t == "{" || t == "+" || t == "-" || t == "~" ||
                       t == "*" || t == "**" || t == "...";
            }
            default:
                return false;
        }
    }

    // Full expression: walrus < ternary < lambda < or < and < not < comparison.
    NodePtr parse_expression() {
        auto left = parse_ternary();
        if (at_op(":=")) {
            advance();
            auto value = parse_ternary();
            auto node = make("named_expression", left->begin, value->end);
            node->children.push_back(std::move(left));
            node->children.push_back(std::move(value));
            return node;
        }
        return left;
    }

    NodePtr parse_ternary() {
        if (at_kw("lambda")) return parse_lambda();
        auto value = parse_or();
        if (!at_kw("if")) return value;
        advance();
        auto cond = parse_or();
        NodePtr alt;
        if (eat_kw("else")) {
            alt = parse_ternary();
        } else {
            mark_error(value->begin, cond->end);
            alt = make("error", cond->end, cond->end);
        }
        auto node = make("conditional_expression", value->begin, alt->end);
        node->children.push_back(std::move(value));
        node->children.push_back(std::move(cond));
        node->children.push_back(std::move(alt));
        return node;
    }

    NodePtr parse_lambda() {
        size_t start = cur().begin;
        advance();
        // Parameters: consume loosely up to the ':'.
        while (!at_op(":") && !stmt_end() && !at(Tok::End)) {
            if (at_op("(") || at_op("[") || at_op("{")) {
                consume_balanced();
                continue;
            }
            advance();
        }
        auto node = make("lambda", start, cur().begin);
        if (eat_op(":")) {
            auto body = parse_ternary();
            node->end = body->end;
            node->children.push_back(std::move(body));
        } else {
            mark_error(start, node->end);
        }
        return node;
    }

    NodePtr parse_or() {
        auto left = parse_and();
        while (at_kw("or")) {
            advance();
            auto right = parse_and();
            auto node = make("boolean_operator", left->begin, right->end);
            node->children.push_back(std::move(left));
            node->children.push_back(std::move(right));
            left = std::move(node);
        }
        return left;
    }

    NodePtr parse_and() {
        auto left = parse_not();
        while (at_kw("and")) {
            advance();
            auto right = parse_not();
            auto node = make("boolean_operator", left->begin, right->end);
            node->children.push_back(std::move(left));
            node->children.push_back(std::move(right));
            left = std::move(node);
        }
        return left;
    }

    NodePtr parse_not() {
        if (at_kw("not")) {
            size_t start = cur().begin;
            advance();
            auto operand = parse_not();
            auto node = make("not_operator", start, operand->end);
            node->children.push_back(std::move(operand));
            return node;
        }
        return parse_comparison();
    }

    bool at_comparison_op() const {
        if (at_kw("in") || at_kw("is")) return true;
        if (at_kw("not") && peek().kind == Tok::Keyword && peek().text == "in") return true;
        if (cur().kind != Tok::Op) return false;
        auto t = cur().text;
        return t == "<" || t == ">" || t == "==" || t == "!=" || t == "<=" || t == ">=";
    }

    NodePtr parse_comparison() {
        auto left = parse_bitwise_or();
        if (!at_comparison_op()) return left;
        auto node = make("comparison_operator", left->begin, left->end);
        node->children.push_back(std::move(left));
        while (at_comparison_op()) {
            if (at_kw("not")) {
                advance(); // 'not in'
                advance();
            } else if (at_kw("is")) {
                advance();
                if (at_kw("not")) advance();
            } else {
                advance();
            }
            auto right = parse_bitwise_or();
            node->end = right->end;
            node->children.push_back(std::move(right));
        }
        return node;
    }

    NodePtr parse_binary_chain(const std::vector<std::string_view>& ops, NodePtr (Parser::*next)()) {
        auto left = (this->*next)();
        while (true) {
            bool matched = false;
            for (auto op : ops) {
                if (at_op(op)) {
                    matched = true;
                    break;
                }
            }
            if (!matched) break;
            advance();
            auto right = (this->*next)();
            auto node = make("binary_operator", left->begin, right->end);
            node->children.push_back(std::move(left));
            node->children.push_back(std::move(right));
            left = std::move(node);
        }
        return left;
    }

    NodePtr parse_bitwise_or() { return parse_binary_chain({"|"}, &Parser::parse_bitwise_xor); }
    NodePtr parse_bitwise_xor() { return parse_binary_chain({"^"}, &Parser::parse_bitwise_and); }
    NodePtr parse_bitwise_and() { return parse_binary_chain({"&"}, &Parser::parse_shift); }
    NodePtr parse_shift() { return parse_binary_chain({"<<", ">>"}, &Parser::parse_arith); }
    NodePtr parse_arith() { return parse_binary_chain({"+", "-"}, &Parser::parse_term); }
    NodePtr parse_term() {
        return parse_binary_chain({"*", "/", "//", "%", "@"}, &Parser::parse_unary);
    }

    NodePtr parse_unary() {
        if (at_op("+") || at_op("-") || at_op("~")) {
            size_t start = cur().begin;
            advance();
            auto operand = parse_unary();
            auto node = make("unary_operator", start, operand->end);
            node->children.push_back(std::move(operand));
            return node;
        }
        return parse_power();
    }

    NodePtr parse_power() {
        auto base = parse_await();
        if (at_op("**")) {
            advance();
            auto exp = parse_unary(); // right-associative
            auto node = make("binary_operator", base->begin, exp->end);
            node->children.push_back(std::move(base));
            node->children.push_back(std::move(exp));
            return node;
        }
        return base;
    }

    NodePtr parse_await() {
        if (at_kw("await")) {
            size_t start = cur().begin;
            advance();
            auto operand = parse_await();
            auto node = make("await", start, operand->end);
            node->children.push_back(std::move(operand));
            return node;
        }
        return parse_postfix();
    }

    NodePtr parse_postfix() {
        auto node = parse_atom();
        while (true) {
            if (at_op("(")) {
                node = parse_call(std::move(node));
            } else if (at_op("[")) {
                node = parse_subscript(std::move(node));
            } else if (at_op(".")) {
                advance();
                if (at(Tok::Ident)) {
                    auto attr = make("attribute", node->begin, cur().end);
                    advance();
                    attr->children.push_back(std::move(node));
                    node = std::move(attr);
                } else {
                    mark_error(node->begin, cur().begin);
                    break;
                }
            } else {
                break;
            }
        }
        return node;
    }

    NodePtr parse_call(NodePtr callee) {
        size_t start = callee->begin;
        advance(); // '('
        auto node = make("call", start, start);
        node->children.push_back(std::move(callee));
        while (!at_op(")") && !at(Tok::End)) {
            size_t before = pos_;
            node->children.push_back(parse_argument());
            if (at_op(",")) advance();
            if (pos_ == before) {
                mark_error(cur().begin, cur().end);
                advance();
            }
        }
        node->end = at_op(")") ? cur().end : cur().begin;
        if (at_op(")"))
            advance();
        else
            mark_error(start, node->end);
        return node;
    }

    NodePtr parse_argument() {
        if (at_op("*") || at_op("**")) {
            size_t start = cur().begin;
            advance();
            auto value = parse_expression();
            auto node = make("starred", start, value->end);
            node->children.push_back(std::move(value));
            return node;
        }
        if (at(Tok::Ident) && peek().kind == Tok::Op && peek().text == "=") {
            size_t start = cur().begin;
            advance(); // name
            advance(); // '='
            auto value = parse_expression();
            auto node = make("keyword_argument", start, value->end);
            node->children.push_back(std::move(value));
            return node;
        }
        auto value = parse_expression();
        if (at_kw("for") || at_kw("async")) return parse_comprehension_rest(std::move(value), "generator_expression");
        return value;
    }

    NodePtr parse_subscript(NodePtr value) {
        size_t start = value->begin;
        advance(); // '['
        auto node = make("subscript", start, start);
        node->children.push_back(std::move(value));
        while (!at_op("]") && !at(Tok::End)) {
            size_t before = pos_;
            node->children.push_back(parse_slice_item());
            if (at_op(",")) advance();
            if (pos_ == before) {
                mark_error(cur().begin, cur().end);
                advance();
            }
        }
        node->end = at_op("]") ? cur().end : cur().begin;
        if (at_op("]"))
            advance();
        else
            mark_error(start, node->end);
        return node;
    }

    NodePtr parse_slice_item() {
        size_t start = cur().begin;
        NodePtr first;
        if (!at_op(":")) first = parse_expression();
        if (!at_op(":")) return first ? std::move(first) : make("error", start, cur().begin);
        auto node = make("slice", first ? first->begin : start, cur().end);
        if (first) node->children.push_back(std::move(first));
        while (eat_op(":")) {
            node->end = toks_[pos_ - 1].end;
            if (!at_op("]") && !at_op(",") && !at_op(":")) {
                auto part = parse_expression();
                node->end = part->end;
                node->children.push_back(std::move(part));
            }
        }
        return node;
    }

    // element already parsed; consume 'for ... in ... [if ...]' clauses.
    NodePtr parse_comprehension_rest(NodePtr element, std::string kind) {
        auto node = make(std::move(kind), element->begin, element->end);
        node->children.push_back(std::move(element));
        while (at_kw("for") || at_kw("async")) {
            if (at_kw("async")) advance();
            if (!eat_kw("for")) break;
            auto target = parse_target_list();
            node->children.push_back(std::move(target));
            if (!eat_kw("in")) {
                mark_error(node->begin, cur().begin);
                break;
            }
            auto iter = parse_or();
            node->end = iter->end;
            node->children.push_back(std::move(iter));
            while (at_kw("if")) {
                advance();
                auto cond = parse_or();
                node->end = cond->end;
                node->children.push_back(std::move(cond));
            }
        }
        return node;
    }

    NodePtr parse_atom() {
        const Token& tok = cur();
        switch (tok.kind) {
            case Tok::Ident: {
                auto node = make("identifier", tok.begin, tok.end);
                advance();
                return node;
            }
            case Tok::Number: {
                auto node = make("number", tok.begin, tok.end);
                advance();
                return node;
            }
            case Tok::Str: {
                // Adjacent string literals concatenate into one node.
                size_t start = tok.begin;
                size_t end = tok.end;
                advance();
                while (at(Tok::Str)) {
                    end = cur().end;
                    advance();
                }
                return make("string", start, end);
            }
            case Tok::Keyword: {
                if (tok.text == "None" || tok.text == "True" || tok.text == "False") {
                    auto node = make(tok.text == "None" ? "none"
                                     : tok.text == "True" ? "true"
                                                          : "false",
                                     tok.begin, tok.end);
                    advance();
                    return node;
                }
                if (tok.text == "yield") return parse_yield();
                if (tok.text == "lambda") return parse_lambda();
                break;
            }
            case Tok::Op: {
                if (tok.text == "(") return parse_paren_atom();
                if (tok.text == "[") return parse_list_atom();
                if (tok.text == "{") return parse_brace_atom();
                if (tok.text == "...") {
                    auto node = make("ellipsis", tok.begin, tok.end);
                    advance();
                    return node;
                }
                if (tok.text == "*" || tok.text == "**") {
                    size_t start = tok.begin;
                    advance();
                    auto inner = parse_unary();
                    auto node = make("starred", start, inner->end);
                    node->children.push_back(std::move(inner));
                    return node;
                }
                break;
            }
            default:
                break;
        }
        // Unexpected token: error atom, always advancing.
        auto node = make("error", tok.begin, tok.end);
        mark_error(tok.begin, tok.end > tok.begin ? tok.end : tok.begin + 1);
        advance();
        return node;
    }

    NodePtr parse_paren_atom() {
        size_t start = cur().begin;
        advance(); // '('
        if (at_op(")")) {
            auto node = make("tuple", start, cur().end);
            advance();
            return node;
        }
        auto first = parse_expression();
        if (at_kw("for") || at_kw("async")) {
            auto node = parse_comprehension_rest(std::move(first), "generator_expression");
            return close_bracket(std::move(node), start, ")");
        }
        if (at_op(",")) {
            auto node = make("tuple", start, first->end);
            node->children.push_back(std::move(first));
            while (eat_op(",")) {
                if (!starts_expression()) break;
                auto next = parse_expression();
                node->children.push_back(std::move(next));
            }
            return close_bracket(std::move(node), start, ")");
        }
        auto node = make("parenthesized_expression", start, first->end);
        node->children.push_back(std::move(first));
        return close_bracket(std::move(node), start, ")");
    }

    NodePtr parse_list_atom() {
        size_t start = cur().begin;
        advance(); // '['
        auto node = make("list", start, start);
        if (at_op("]")) {
            node->end = cur().end;
            advance();
            return node;
        }
        auto first = parse_expression();
        if (at_kw("for") || at_kw("async")) {
            auto comp = parse_comprehension_rest(std::move(first), "list_comprehension");
            return close_bracket(std::move(comp), start, "]");
        }
        node->children.push_back(std::move(first));
        while (eat_op(",")) {
            if (!starts_expression()) break;
            node->children.push_back(parse_expression());
        }
        return close_bracket(std::move(node), start, "]");
    }

    NodePtr parse_brace_atom() {
        size_t start = cur().begin;
        advance(); // '{'
        if (at_op("}")) {
            auto node = make("dictionary", start, cur().end);
            advance();
            return node;
        }
        bool is_dict = false;
        NodePtr first;
        if (at_op("**")) {
            is_dict = true;
            size_t s = cur().begin;
            advance();
            auto inner = parse_expression();
            first = make("starred", s, inner->end);
            first->children.push_back(std::move(inner));
        } else {
            first = parse_expression();
            if (at_op(":")) {
                is_dict = true;
                advance();
                auto value = parse_expression();
                auto pair = make("pair", first->begin, value->end);
                pair->children.push_back(std::move(first));
                pair->children.push_back(std::move(value));
                first = std::move(pair);
            }
        }
        if (at_kw("for") || at_kw("async")) {
            auto comp = parse_comprehension_rest(
                std::move(first), is_dict ? "dictionary_comprehension" : "set_comprehension");
            return close_bracket(std::move(comp), start, "}");
        }
        auto node = make(is_dict ? "dictionary" : "set", start, start);
        node->children.push_back(std::move(first));
        while (eat_op(",")) {
            if (!starts_expression() && !at_op("**")) break;
            if (is_dict) {
                if (at_op("**")) {
                    size_t s = cur().begin;
                    advance();
                    auto inner = parse_expression();
                    auto splat = make("starred", s, inner->end);
                    splat->children.push_back(std::move(inner));
                    node->children.push_back(std::move(splat));
                    continue;
                }
                auto key = parse_expression();
                if (eat_op(":")) {
                    auto value = parse_expression();
                    auto pair = make("pair", key->begin, value->end);
                    pair->children.push_back(std::move(key));
                    pair->children.push_back(std::move(value));
                    node->children.push_back(std::move(pair));
                } else {
                    node->children.push_back(std::move(key));
                }
            } else {
                node->children.push_back(parse_expression());
            }
        }
        return close_bracket(std::move(node), start, "}");
    }

    NodePtr close_bracket(NodePtr node, size_t start, std::string_view closer) {
        if (at_op(closer)) {
            node->begin = start < node->begin ? start : node->begin;
            node->end = cur().end;
            advance();
        } else {
            node->begin = start < node->begin ? start : node->begin;
            node->end = cur().begin > node->end ? cur().begin : node->end;
            mark_error(start, node->end);
        }
        return node;
    }

    // Consume a balanced bracketed region starting at the current '(' / '[' /
    // '{' token. Used for parameter lists we model loosely.
    void consume_balanced() {
        int depth = 0;
        do {
            if (at_op("(") || at_op("[") || at_op("{")) ++depth;
            if (at_op(")") || at_op("]") || at_op("}")) --depth;
            if (at(Tok::End)) return;
            advance();
        } while (depth > 0);
    }
};

} // namespace py

// ---------------------------------------------------------------------------
// Grammar registry

class PythonGrammar final : public Grammar {
public:
    std::string name() const override { return "python"; }

    SyntaxTree parse(std::string_view source) const override {
        py::Lexer lexer(source);
        auto tokens = lexer.run();
        std::vector<ByteRange> bad;
        for (const auto& tok : tokens)
            if (tok.kind == py::Tok::Bad) bad.push_back({tok.begin, tok.end});
        py::Parser parser(source, std::move(tokens));
        auto tree = parser.run();
        tree.error_ranges.insert(tree.error_ranges.end(), bad.begin(), bad.end());
        return tree;
    }
};

inline const Grammar* find_grammar(const LanguageTag& lang) {
    static const PythonGrammar python;
    if (lang.kind == LanguageKind::Python) return &python;
    return nullptr;
}

inline bool has_grammar(const LanguageTag& lang) { return find_grammar(lang) != nullptr; }

inline SyntaxTree parse_source(const SourceFile& file) {
    const Grammar* grammar = find_grammar(file.language);
    if (!grammar)
        throw UnsupportedLanguageError("no grammar registered for language: " +
                                       to_string(file.language));
    return grammar->parse(file.content);
}

} // namespace repofim
