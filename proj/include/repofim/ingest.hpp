#pragma once

// Repository snapshotting. Walks a directory, decodes text files, classifies
// languages by extension, applies size/star/ignore filters and returns an
// immutable snapshot that all later stages work from.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "repofim/tokenize.hpp"
#include "repofim/util.hpp"

namespace repofim {

struct IngestError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Language classification

enum class LanguageKind {
    Python,
    CSharp,
    Cpp,
    Java,
    JavaScript,
    TypeScript,
    Php,
    Other,
};

struct LanguageTag {
    LanguageKind kind = LanguageKind::Other;
    std::string other_name; // extension without the dot, only for Other

    bool operator==(const LanguageTag& rhs) const {
        return kind == rhs.kind && (kind != LanguageKind::Other || other_name == rhs.other_name);
    }
    bool operator!=(const LanguageTag& rhs) const { return !(*this == rhs); }
};

inline std::string to_string(const LanguageTag& tag) {
    switch (tag.kind) {
        case LanguageKind::Python: return "python";
        case LanguageKind::CSharp: return "csharp";
        case LanguageKind::Cpp: return "cpp";
        case LanguageKind::Java: return "java";
        case LanguageKind::JavaScript: return "javascript";
        case LanguageKind::TypeScript: return "typescript";
        case LanguageKind::Php: return "php";
        case LanguageKind::Other:
            return tag.other_name.empty() ? "other" : "other:" + tag.other_name;
    }
    return "other";
}

inline LanguageTag language_from_string(std::string_view s) {
    if (s == "python") return {LanguageKind::Python, {}};
    if (s == "csharp") return {LanguageKind::CSharp, {}};
    if (s == "cpp") return {LanguageKind::Cpp, {}};
    if (s == "java") return {LanguageKind::Java, {}};
    if (s == "javascript") return {LanguageKind::JavaScript, {}};
    if (s == "typescript") return {LanguageKind::TypeScript, {}};
    if (s == "php") return {LanguageKind::Php, {}};
    if (s.rfind("other:", 0) == 0) return {LanguageKind::Other, std::string(s.substr(6))};
    return {LanguageKind::Other, {}};
}

// Extension-based classification. `content` is accepted for future shebang
// sniffing but must not change the result for the named extensions.
inline LanguageTag detect_language(std::string_view path, std::string_view content = {}) {
    (void)content;
    auto dot = path.rfind('.');
    auto slash = path.rfind('/');
    if (dot == std::string_view::npos || (slash != std::string_view::npos && dot < slash))
        return {LanguageKind::Other, {}};
    std::string ext = ascii_lower(path.substr(dot + 1));
    if (ext == "py") return {LanguageKind::Python, {}};
    if (ext == "cs") return {LanguageKind::CSharp, {}};
    if (ext == "cpp" || ext == "cc" || ext == "hpp" || ext == "h") return {LanguageKind::Cpp, {}};
    if (ext == "java") return {LanguageKind::Java, {}};
    if (ext == "js") return {LanguageKind::JavaScript, {}};
    if (ext == "ts") return {LanguageKind::TypeScript, {}};
    if (ext == "php") return {LanguageKind::Php, {}};
    return {LanguageKind::Other, ext};
}

// ---------------------------------------------------------------------------
// Snapshot types

struct SourceFile {
    std::string path;    // relative, forward slashes
    std::string content; // UTF-8, LF line endings
    LanguageTag language;
    size_t line_count = 0;
    size_t token_count = 0;
    uint64_t content_hash = 0;
};

struct RepoMeta {
    std::optional<uint64_t> stars;
    std::optional<std::string> commit;
    size_t directory_count = 0;
};

struct RepoSnapshot {
    std::string repo_id;
    std::filesystem::path root;
    std::vector<SourceFile> files; // sorted lexicographically by path
    std::string test_command;
    RepoMeta meta;

    const SourceFile* find(std::string_view path) const {
        for (const auto& f : files)
            if (f.path == path) return &f;
        return nullptr;
    }
};

struct IngestFilters {
    size_t max_file_bytes = 1 << 20;
    std::optional<uint64_t> min_stars; // applied only if the sidecar provides stars
    std::vector<std::string> ignore_patterns = {".git/", "__pycache__/", "*.pyc"};
};

// Content hash of a whole snapshot; used for immutability checks and for
// stage resumability.
inline uint64_t snapshot_hash(const RepoSnapshot& snap) {
    uint64_t h = fnv1a64(snap.repo_id);
    for (const auto& f : snap.files) {
        h = hash_combine(h, fnv1a64(f.path));
        h = hash_combine(h, f.content_hash);
    }
    return h;
}

// Name of the optional metadata sidecar at the repository root.
inline constexpr const char* kMetaSidecarName = ".repofim-meta.json";

namespace detail {

inline void read_meta_sidecar(const std::filesystem::path& root, RepoMeta& meta) {
    auto sidecar = root / kMetaSidecarName;
    auto bytes = read_file_bytes(sidecar);
    if (!bytes) return;
    auto parsed = nlohmann::json::parse(*bytes, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
        std::cerr << "warning: malformed sidecar ignored: " << sidecar.string() << "\n";
        return;
    }
    if (parsed.contains("stars") && parsed["stars"].is_number_unsigned())
        meta.stars = parsed["stars"].get<uint64_t>();
    if (parsed.contains("commit") && parsed["commit"].is_string())
        meta.commit = parsed["commit"].get<std::string>();
}

inline size_t count_directories(const std::vector<SourceFile>& files) {
    if (files.empty()) return 0;
    std::set<std::string> dirs;
    dirs.insert(""); // the root itself
    for (const auto& f : files) {
        std::string_view p = f.path;
        for (size_t i = 0; i < p.size(); ++i)
            if (p[i] == '/') dirs.insert(std::string(p.substr(0, i)));
    }
    return dirs.size();
}

} // namespace detail

// Snapshot a repository from disk. Undecodable or oversized files are
// skipped (with a warning for decode failures); an unreadable root is fatal.
inline RepoSnapshot scan_repository(const std::filesystem::path& root, const IngestFilters& filters,
                                    const Tokenizer& tokenizer, std::string repo_id = {},
                                    std::string test_command = {}) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(root, ec) || ec)
        throw IngestError("repository root is not a readable directory: " + root.string());

    RepoSnapshot snap;
    snap.repo_id = repo_id.empty() ? root.filename().string() : std::move(repo_id);
    snap.root = root;
    snap.test_command = std::move(test_command);
    detail::read_meta_sidecar(root, snap.meta);

    if (filters.min_stars && snap.meta.stars && *snap.meta.stars < *filters.min_stars) {
        snap.meta.directory_count = 0;
        return snap; // filtered out wholesale; empty snapshot
    }

    std::vector<fs::path> candidates;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    if (ec) throw IngestError("cannot iterate repository root: " + root.string());
    for (auto end = fs::recursive_directory_iterator(); it != end; it.increment(ec)) {
        if (ec) throw IngestError("directory iteration failed under: " + root.string());
        const auto& entry = *it;
        auto rel = fs::relative(entry.path(), root, ec).generic_string();
        if (ec) continue;
        if (entry.is_directory()) {
            if (matches_any_glob(filters.ignore_patterns, rel, /*is_dir=*/true))
                it.disable_recursion_pending();
            continue;
        }
        if (!entry.is_regular_file()) continue;
        if (rel == kMetaSidecarName) continue;
        if (matches_any_glob(filters.ignore_patterns, rel, /*is_dir=*/false)) continue;
        candidates.push_back(entry.path());
    }

    for (const auto& abs : candidates) {
        auto rel = fs::relative(abs, root).generic_string();
        std::error_code size_ec;
        auto size = fs::file_size(abs, size_ec);
        if (size_ec) {
            std::cerr << "warning: skipping unreadable file: " << rel << "\n";
            continue;
        }
        if (size > filters.max_file_bytes) continue;
        auto bytes = read_file_bytes(abs);
        if (!bytes) {
            std::cerr << "warning: skipping unreadable file: " << rel << "\n";
            continue;
        }
        if (bytes->find('\0') != std::string::npos || !is_valid_utf8(*bytes)) {
            std::cerr << "warning: skipping undecodable file: " << rel << "\n";
            continue;
        }
        SourceFile f;
        f.path = rel;
        f.content = normalize_newlines(*bytes);
        f.language = detect_language(f.path, f.content);
        f.line_count = count_lines(f.content);
        f.token_count = tokenizer.count(f.content);
        f.content_hash = fnv1a64(f.content);
        snap.files.push_back(std::move(f));
    }

    std::sort(snap.files.begin(), snap.files.end(),
              [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
    snap.meta.directory_count = detail::count_directories(snap.files);
    return snap;
}

struct LanguageCounts {
    size_t total = 0;
    size_t python = 0;
    size_t other = 0; // everything that is not Python, matching the
                      // benchmark overview's Python/Other split
};

inline LanguageCounts count_languages(const RepoSnapshot& snap) {
    LanguageCounts c;
    c.total = snap.files.size();
    for (const auto& f : snap.files) {
        if (f.language.kind == LanguageKind::Python)
            ++c.python;
        else
            ++c.other;
    }
    return c;
}

} // namespace repofim
