#pragma once

// Pipeline configuration: one JSON file drives every stage. Relative paths
// resolve against the directory containing the config file. Section paths
// follow mask.<language>.<level> for the node-kind whitelists.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "repofim/client.hpp"
#include "repofim/corpus.hpp"
#include "repofim/harness.hpp"
#include "repofim/ingest.hpp"
#include "repofim/mask.hpp"
#include "repofim/metrics.hpp"
#include "repofim/util.hpp"

namespace repofim {

struct RepoEntry {
    std::string name;
    std::filesystem::path path;
    std::string test_command;
};

enum class CorpusContextMode { CrossFile, InFile, Both };

inline std::string to_string(CorpusContextMode m) {
    switch (m) {
        case CorpusContextMode::CrossFile: return "cross_file";
        case CorpusContextMode::InFile: return "in_file";
        case CorpusContextMode::Both: return "both";
    }
    return "cross_file";
}

struct PipelineConfig {
    uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    std::vector<RepoEntry> repos;

    IngestFilters ingest;

    // mask section
    std::vector<MaskLevel> levels = default_benchmark_levels();
    CarveConstraints carve = default_carve_constraints();
    size_t tasks_per_file = 4; // per level

    // context section
    size_t max_total_tokens = 32768;
    size_t headroom_tokens = 512;
    std::string tokenizer_name = "approx";

    // decontam section
    size_t ngram_n = 20;
    std::vector<std::filesystem::path> reference_paths;
    std::filesystem::path index_dir;

    std::map<std::string, ModelEndpoint> endpoints;
    RetryPolicy retry;
    size_t request_concurrency = 8;

    SandboxSpec sandbox;
    size_t sandbox_workers = 0; // 0 = cores / 2

    // corpus section
    MixturePolicy mixture;
    std::filesystem::path qa_path;
    CorpusContextMode corpus_context_mode = CorpusContextMode::CrossFile;
    std::string corpus_template = "default";

    uint64_t config_hash = 0; // of the raw config file plus the seed

    size_t effective_sandbox_workers() const {
        if (sandbox_workers > 0) return sandbox_workers;
        unsigned hw = std::thread::hardware_concurrency();
        return hw > 1 ? hw / 2 : 1;
    }
};

namespace detail {

inline std::filesystem::path resolve_path(const std::filesystem::path& base,
                                          const std::filesystem::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return base / p;
}

inline void parse_mask_section(const nlohmann::json& j, PipelineConfig& cfg,
                               std::vector<std::string>& errors) {
    if (j.contains("levels")) {
        cfg.levels.clear();
        for (const auto& item : j["levels"]) {
            auto level = mask_level_from_string(item.get<std::string>());
            if (!level)
                errors.push_back("mask.levels: unknown level '" + item.get<std::string>() + "'");
            else
                cfg.levels.push_back(*level);
        }
    }
    if (j.contains("min_middle_tokens")) cfg.carve.min_middle_tokens = j["min_middle_tokens"];
    if (j.contains("max_middle_tokens")) cfg.carve.max_middle_tokens = j["max_middle_tokens"];
    if (j.contains("tasks_per_file")) cfg.tasks_per_file = j["tasks_per_file"];
    if (j.contains("function_mode")) {
        std::string mode = j["function_mode"];
        if (mode == "body")
            cfg.carve.function_mode = FunctionMaskMode::BodyOnly;
        else if (mode == "full")
            cfg.carve.function_mode = FunctionMaskMode::FullDefinition;
        else
            errors.push_back("mask.function_mode: expected 'body' or 'full', got '" + mode + "'");
    }
    // Per-language whitelist overrides: mask.<language>.<level> = [kinds...]
    for (const auto& [key, value] : j.items()) {
        if (!value.is_object()) continue;
        for (const auto& [level_name, kinds] : value.items()) {
            auto level = mask_level_from_string(level_name);
            if (!level || !is_grammar_level(*level)) {
                errors.push_back("mask." + key + "." + level_name + ": not a grammar level");
                continue;
            }
            std::vector<std::string> list;
            for (const auto& kind : kinds) list.push_back(kind.get<std::string>());
            cfg.carve.whitelists[key][*level] = std::move(list);
        }
    }
}

inline void parse_endpoint(const std::string& name, const nlohmann::json& j, PipelineConfig& cfg,
                           std::vector<std::string>& errors) {
    ModelEndpoint ep;
    ep.name = name;
    if (j.contains("base_url")) ep.base_url = j["base_url"];
    if (j.contains("auth_env")) ep.auth_env = j["auth_env"];
    if (j.contains("model")) ep.model_name = j["model"];
    if (j.contains("mode")) {
        std::string mode = j["mode"];
        if (mode == "fim")
            ep.mode = PromptMode::Fim;
        else if (mode == "chat")
            ep.mode = PromptMode::Chat;
        else
            errors.push_back("endpoints." + name + ".mode: expected 'fim' or 'chat'");
    }
    if (j.contains("preset")) {
        std::string preset = j["preset"];
        if (!apply_fim_preset(ep, preset))
            errors.push_back("endpoints." + name + ".preset: unknown preset '" + preset + "'");
    }
    if (j.contains("fim_prefix")) ep.fim_prefix = j["fim_prefix"];
    if (j.contains("fim_suffix")) ep.fim_suffix = j["fim_suffix"];
    if (j.contains("fim_middle")) ep.fim_middle = j["fim_middle"];
    if (j.contains("order")) {
        std::string order = j["order"];
        if (order == "psm")
            ep.order = FimOrder::Psm;
        else if (order == "spm")
            ep.order = FimOrder::Spm;
        else
            errors.push_back("endpoints." + name + ".order: expected 'psm' or 'spm'");
    }
    if (j.contains("max_new_tokens")) ep.max_new_tokens = j["max_new_tokens"];
    if (j.contains("temperature")) ep.temperature = j["temperature"];
    if (j.contains("timeout_seconds")) ep.timeout_seconds = j["timeout_seconds"];
    if (j.contains("stop"))
        for (const auto& s : j["stop"]) ep.stop.push_back(s.get<std::string>());
    if (ep.mode == PromptMode::Fim &&
        (ep.fim_prefix.empty() || ep.fim_suffix.empty() || ep.fim_middle.empty()))
        errors.push_back("endpoints." + name + ": fim mode requires all three markers");
    if (ep.base_url.empty())
        errors.push_back("endpoints." + name + ".base_url: required");
    cfg.endpoints[name] = std::move(ep);
}

} // namespace detail

struct ConfigLoadResult {
    PipelineConfig config;
    std::vector<std::string> errors; // non-empty means invalid

    bool ok() const { return errors.empty(); }
};

inline ConfigLoadResult load_config(const std::filesystem::path& config_path) {
    ConfigLoadResult result;
    auto& cfg = result.config;
    auto& errors = result.errors;

    auto bytes = read_file_bytes(config_path);
    if (!bytes) {
        errors.push_back("cannot read config file: " + config_path.string());
        return result;
    }
    auto j = nlohmann::json::parse(*bytes, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        errors.push_back("config is not a JSON object: " + config_path.string());
        return result;
    }
    const auto base = std::filesystem::absolute(config_path).parent_path();
    cfg.config_hash = fnv1a64(*bytes);

    if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
    if (j.contains("out_dir"))
        cfg.out_dir = detail::resolve_path(base, j["out_dir"].get<std::string>());
    else
        cfg.out_dir = base / "out";

    if (!j.contains("repos") || !j["repos"].is_array() || j["repos"].empty()) {
        errors.push_back("repos: at least one repository entry is required");
    } else {
        for (const auto& r : j["repos"]) {
            RepoEntry entry;
            if (!r.contains("path")) {
                errors.push_back("repos[]: 'path' is required");
                continue;
            }
            entry.path = detail::resolve_path(base, r["path"].get<std::string>());
            entry.name = r.contains("name") ? r["name"].get<std::string>()
                                            : entry.path.filename().string();
            if (r.contains("test_command")) entry.test_command = r["test_command"];
            if (entry.test_command.empty())
                errors.push_back("repos['" + entry.name + "']: 'test_command' is required");
            if (!std::filesystem::is_directory(entry.path))
                errors.push_back("repos['" + entry.name +
                                 "']: path does not exist: " + entry.path.string());
            cfg.repos.push_back(std::move(entry));
        }
    }

    if (j.contains("ingest")) {
        const auto& ing = j["ingest"];
        if (ing.contains("max_file_bytes")) cfg.ingest.max_file_bytes = ing["max_file_bytes"];
        if (ing.contains("min_stars") && !ing["min_stars"].is_null())
            cfg.ingest.min_stars = ing["min_stars"].get<uint64_t>();
        if (ing.contains("ignore")) {
            cfg.ingest.ignore_patterns.clear();
            for (const auto& p : ing["ignore"])
                cfg.ingest.ignore_patterns.push_back(p.get<std::string>());
        }
    }

    if (j.contains("mask")) detail::parse_mask_section(j["mask"], cfg, errors);
    if (cfg.carve.min_middle_tokens < 1)
        errors.push_back("mask.min_middle_tokens: must be >= 1");
    if (cfg.carve.max_middle_tokens < cfg.carve.min_middle_tokens)
        errors.push_back("mask.max_middle_tokens: must be >= min_middle_tokens");

    if (j.contains("context")) {
        const auto& ctx = j["context"];
        if (ctx.contains("max_total_tokens")) cfg.max_total_tokens = ctx["max_total_tokens"];
        if (ctx.contains("headroom_tokens")) cfg.headroom_tokens = ctx["headroom_tokens"];
        if (ctx.contains("tokenizer")) cfg.tokenizer_name = ctx["tokenizer"];
    }
    try {
        make_tokenizer(cfg.tokenizer_name);
    } catch (const ConfigError& e) {
        errors.push_back(std::string("context.tokenizer: ") + e.what());
    }

    if (j.contains("decontam")) {
        const auto& d = j["decontam"];
        if (d.contains("n")) cfg.ngram_n = d["n"];
        if (d.contains("reference_paths"))
            for (const auto& p : d["reference_paths"])
                cfg.reference_paths.push_back(detail::resolve_path(base, p.get<std::string>()));
        if (d.contains("index_dir"))
            cfg.index_dir = detail::resolve_path(base, d["index_dir"].get<std::string>());
        if (cfg.ngram_n < 1) errors.push_back("decontam.n: must be >= 1");
    }
    if (cfg.index_dir.empty()) cfg.index_dir = cfg.out_dir / "ngram-index";

    if (j.contains("endpoints"))
        for (const auto& [name, ep] : j["endpoints"].items())
            detail::parse_endpoint(name, ep, cfg, errors);
    if (j.contains("retry")) {
        const auto& r = j["retry"];
        if (r.contains("max_retries")) cfg.retry.max_retries = r["max_retries"];
        if (r.contains("initial_backoff_ms")) cfg.retry.initial_backoff_ms = r["initial_backoff_ms"];
    }
    if (j.contains("request_concurrency")) cfg.request_concurrency = j["request_concurrency"];

    if (j.contains("sandbox")) {
        const auto& s = j["sandbox"];
        if (s.contains("timeout_seconds")) cfg.sandbox.timeout_seconds = s["timeout_seconds"];
        if (s.contains("max_output_capture_bytes"))
            cfg.sandbox.max_output_capture_bytes = s["max_output_capture_bytes"];
        if (s.contains("env_allowlist")) {
            cfg.sandbox.env_allowlist.clear();
            for (const auto& e : s["env_allowlist"])
                cfg.sandbox.env_allowlist.push_back(e.get<std::string>());
        }
        if (s.contains("workers")) cfg.sandbox_workers = s["workers"];
        if (cfg.sandbox.timeout_seconds <= 0)
            errors.push_back("sandbox.timeout_seconds: must be > 0");
    }

    if (j.contains("corpus")) {
        const auto& c = j["corpus"];
        if (c.contains("completion_weight"))
            cfg.mixture.completion_weight = c["completion_weight"];
        if (c.contains("qa_path"))
            cfg.qa_path = detail::resolve_path(base, c["qa_path"].get<std::string>());
        if (c.contains("template")) cfg.corpus_template = c["template"];
        if (c.contains("context_mode")) {
            std::string mode = c["context_mode"];
            if (mode == "cross_file")
                cfg.corpus_context_mode = CorpusContextMode::CrossFile;
            else if (mode == "in_file")
                cfg.corpus_context_mode = CorpusContextMode::InFile;
            else if (mode == "both")
                cfg.corpus_context_mode = CorpusContextMode::Both;
            else
                errors.push_back("corpus.context_mode: expected cross_file|in_file|both");
        }
        if (cfg.mixture.completion_weight < 0.0 || cfg.mixture.completion_weight > 1.0)
            errors.push_back("corpus.completion_weight: must lie in [0, 1]");
    }

    cfg.config_hash = hash_combine(cfg.config_hash, cfg.seed);
    return result;
}

} // namespace repofim
