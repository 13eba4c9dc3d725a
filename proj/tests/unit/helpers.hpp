#pragma once

// Shared test scaffolding: fixture paths, throwaway directories, quick
// SourceFile construction.

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "repofim/ingest.hpp"
#include "repofim/tokenize.hpp"

namespace testutil {

inline std::filesystem::path fixtures_dir() { return {REPOFIM_FIXTURES_DIR}; }

inline repofim::SourceFile make_file(std::string path, std::string content) {
    repofim::ApproxTokenizer tok;
    repofim::SourceFile f;
    f.path = std::move(path);
    f.content = std::move(content);
    f.language = repofim::detect_language(f.path, f.content);
    f.line_count = repofim::count_lines(f.content);
    f.token_count = tok.count(f.content);
    f.content_hash = repofim::fnv1a64(f.content);
    return f;
}

// Unique directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<uint64_t> counter{0};
        auto unique = repofim::hash_combine(static_cast<uint64_t>(::getpid()),
                                            counter.fetch_add(1) + 0x51u);
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + repofim::to_hex16(unique));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace testutil
