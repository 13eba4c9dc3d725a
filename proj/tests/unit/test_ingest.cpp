#include <doctest.h>

#include "helpers.hpp"
#include "repofim/ingest.hpp"

using namespace repofim;

TEST_SUITE("ingest") {

TEST_CASE("detect_language maps extensions") {
    CHECK(detect_language("src/main.py").kind == LanguageKind::Python);
    CHECK(detect_language("lib/util.ts").kind == LanguageKind::TypeScript);
    CHECK(detect_language("a.cs").kind == LanguageKind::CSharp);
    CHECK(detect_language("a.cpp").kind == LanguageKind::Cpp);
    CHECK(detect_language("a.cc").kind == LanguageKind::Cpp);
    CHECK(detect_language("a.hpp").kind == LanguageKind::Cpp);
    CHECK(detect_language("a.h").kind == LanguageKind::Cpp);
    CHECK(detect_language("A.java").kind == LanguageKind::Java);
    CHECK(detect_language("a.js").kind == LanguageKind::JavaScript);
    CHECK(detect_language("a.php").kind == LanguageKind::Php);
    auto md = detect_language("README.md");
    CHECK(md.kind == LanguageKind::Other);
    CHECK(md.other_name == "md");
    CHECK(detect_language("Makefile").kind == LanguageKind::Other);
    CHECK(detect_language("Makefile").other_name.empty());
    // content must not change the result for known extensions
    CHECK(detect_language("x.py", "#!/usr/bin/env bash").kind == LanguageKind::Python);
    CHECK(to_string(md) == "other:md");
    CHECK(language_from_string("other:md") == md);
}

TEST_CASE("binary and oversized files are excluded") {
    testutil::TempDir tmp("ingest-binary");
    write_file(tmp.path() / "a.py", "x = 1\n");
    std::string png("\x89PNG\0\0binary", 11);
    write_file(tmp.path() / "img.png", png);
    write_file(tmp.path() / "eleven.txt", "0123456789X"); // 11 bytes

    ApproxTokenizer tok;
    IngestFilters filters;
    SUBCASE("binary exclusion") {
        auto snap = scan_repository(tmp.path(), filters, tok);
        REQUIRE(snap.files.size() == 2); // a.py + eleven.txt
        CHECK(snap.files[0].path == "a.py");
    }
    SUBCASE("size threshold boundary") {
        filters.max_file_bytes = 10;
        auto snap = scan_repository(tmp.path(), filters, tok);
        REQUIRE(snap.files.size() == 1);
        CHECK(snap.files[0].path == "a.py");
    }
}

TEST_CASE("calculator fixture matches the overview counts") {
    ApproxTokenizer tok;
    auto snap = scan_repository(testutil::fixtures_dir() / "calculator", IngestFilters{}, tok,
                                "calc", "python3 run_tests.py");
    auto counts = count_languages(snap);
    CHECK(counts.total == 4);
    CHECK(counts.python == 3);
    CHECK(counts.other == 1);
    CHECK(snap.meta.directory_count == 1);
    // lexicographic order
    for (size_t i = 1; i < snap.files.size(); ++i)
        CHECK(snap.files[i - 1].path < snap.files[i].path);
}

TEST_CASE("rescanning is deterministic") {
    ApproxTokenizer tok;
    auto a = scan_repository(testutil::fixtures_dir() / "bank", IngestFilters{}, tok, "bank", "");
    auto b = scan_repository(testutil::fixtures_dir() / "bank", IngestFilters{}, tok, "bank", "");
    CHECK(snapshot_hash(a) == snapshot_hash(b));
    REQUIRE(a.files.size() == b.files.size());
    for (size_t i = 0; i < a.files.size(); ++i) {
        CHECK(a.files[i].path == b.files[i].path);
        CHECK(a.files[i].content == b.files[i].content);
        CHECK(a.files[i].content_hash == fnv1a64(a.files[i].content));
    }
}

TEST_CASE("sidecar provides stars and commit and is not a snapshot file") {
    ApproxTokenizer tok;
    auto snap = scan_repository(testutil::fixtures_dir() / "bank", IngestFilters{}, tok);
    REQUIRE(snap.meta.stars.has_value());
    CHECK(*snap.meta.stars == 128);
    REQUIRE(snap.meta.commit.has_value());
    CHECK(*snap.meta.commit == "f3a9c1d");
    CHECK(snap.find(kMetaSidecarName) == nullptr);
}

TEST_CASE("stars filter applies only when metadata provides stars") {
    ApproxTokenizer tok;
    IngestFilters filters;
    filters.min_stars = 1000;
    auto bank = scan_repository(testutil::fixtures_dir() / "bank", filters, tok);
    CHECK(bank.files.empty()); // 128 < 1000
    auto calc = scan_repository(testutil::fixtures_dir() / "calculator", filters, tok);
    CHECK(calc.files.size() == 4); // no sidecar: filter not applied
}

TEST_CASE("directory count spans nested paths") {
    ApproxTokenizer tok;
    auto snap = scan_repository(testutil::fixtures_dir() / "textkit", IngestFilters{}, tok);
    CHECK(snap.meta.directory_count == 2); // root + textkit/
    for (const auto& f : snap.files) CHECK(f.path.find('\\') == std::string::npos);
}

TEST_CASE("line endings are normalized and counted") {
    testutil::TempDir tmp("ingest-crlf");
    write_file(tmp.path() / "win.py", "a = 1\r\nb = 2\r\n");
    ApproxTokenizer tok;
    auto snap = scan_repository(tmp.path(), IngestFilters{}, tok);
    REQUIRE(snap.files.size() == 1);
    CHECK(snap.files[0].content == "a = 1\nb = 2\n");
    CHECK(snap.files[0].line_count == 2);
    CHECK(snap.files[0].token_count == tok.count(snap.files[0].content));
}

TEST_CASE("ignore patterns prune files and directories") {
    testutil::TempDir tmp("ingest-ignore");
    write_file(tmp.path() / "keep.py", "x = 1\n");
    write_file(tmp.path() / "skip.pyc", "not really bytecode");
    write_file(tmp.path() / "__pycache__" / "keep.cpython-310.pyc", "cache");
    write_file(tmp.path() / ".git" / "HEAD", "ref: refs/heads/main\n");
    ApproxTokenizer tok;
    auto snap = scan_repository(tmp.path(), IngestFilters{}, tok);
    REQUIRE(snap.files.size() == 1);
    CHECK(snap.files[0].path == "keep.py");
}

TEST_CASE("unreadable root is fatal") {
    ApproxTokenizer tok;
    CHECK_THROWS_AS(
        scan_repository("/nonexistent/definitely/missing", IngestFilters{}, tok),
        IngestError);
}

TEST_CASE("invalid utf-8 files are skipped, not fatal") {
    testutil::TempDir tmp("ingest-utf8");
    write_file(tmp.path() / "good.py", "x = 1\n");
    write_file(tmp.path() / "bad.py", std::string("x = \xc3 broken\n"));
    ApproxTokenizer tok;
    auto snap = scan_repository(tmp.path(), IngestFilters{}, tok);
    REQUIRE(snap.files.size() == 1);
    CHECK(snap.files[0].path == "good.py");
}

} // TEST_SUITE
