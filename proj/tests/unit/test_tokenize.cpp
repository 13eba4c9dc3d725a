#include <doctest.h>

#include "repofim/tokenize.hpp"

using namespace repofim;

TEST_SUITE("tokenize") {

TEST_CASE("approx tokenizer splits words and punctuation") {
    ApproxTokenizer tok;
    CHECK(tok.count("") == 0);
    CHECK(tok.count("   \n\t") == 0);
    CHECK(tok.count("hello") == 1);
    CHECK(tok.count("hello world") == 2);
    // def add ( a , b ) :  -> 8 tokens
    CHECK(tok.count("def add(a, b):") == 8);
    CHECK(tok.count("x+=1") == 4); // x, +, =, 1
    CHECK(tok.count("snake_case_2") == 1);
}

TEST_CASE("spans agree with count and cover tokens exactly") {
    ApproxTokenizer tok;
    std::string text = "alpha = beta(1, 2)\n";
    auto spans = tok.spans(text);
    CHECK(spans.size() == tok.count(text));
    for (const auto& s : spans) {
        CHECK(s.begin < s.end);
        CHECK(s.end <= text.size());
    }
    CHECK(text.substr(spans[0].begin, spans[0].end - spans[0].begin) == "alpha");
    CHECK(text.substr(spans[2].begin, spans[2].end - spans[2].begin) == "beta");
}

TEST_CASE("multibyte characters stay in one token") {
    ApproxTokenizer tok;
    CHECK(tok.count("caf\xc3\xa9 bar") == 2);
}

TEST_CASE("head and tail truncation cut at token boundaries") {
    ApproxTokenizer tok;
    std::string text = "one two three four";
    CHECK(keep_head_tokens(tok, text, 2) == "one two");
    CHECK(keep_tail_tokens(tok, text, 2) == "three four");
    CHECK(keep_head_tokens(tok, text, 0) == "");
    CHECK(keep_head_tokens(tok, text, 99) == text);
    CHECK(tok.count(keep_head_tokens(tok, text, 3)) == 3);
    CHECK(tok.count(keep_tail_tokens(tok, text, 3)) == 3);
}

TEST_CASE("unknown tokenizer name is a config error") {
    CHECK_THROWS_AS(make_tokenizer("model-exact"), ConfigError);
    CHECK(make_tokenizer("approx")->name() == "approx");
}

} // TEST_SUITE
