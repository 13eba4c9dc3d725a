#pragma once

// Pipeline orchestration: ingest -> generate -> decontaminate -> evaluate ->
// report / corpus / stats. Stages communicate through JSONL artifacts in the
// output directory; every line carries a schema version and ids so each
// artifact can be audited on its own. A run manifest records config hash,
// seeds and artifact hashes, making completed stages byte-wise no-ops on
// re-runs.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "repofim/client.hpp"
#include "repofim/config.hpp"
#include "repofim/context.hpp"
#include "repofim/corpus.hpp"
#include "repofim/decontam.hpp"
#include "repofim/harness.hpp"
#include "repofim/ingest.hpp"
#include "repofim/mask.hpp"
#include "repofim/metrics.hpp"

namespace repofim {

// A stage was asked to run before its input artifact exists.
struct MissingArtifactError : Error {
    using Error::Error;
};

struct StageError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Artifact paths

struct ArtifactPaths {
    std::filesystem::path out_dir;

    std::filesystem::path snapshots() const { return out_dir / "snapshots.jsonl"; }
    std::filesystem::path tasks() const { return out_dir / "tasks.jsonl"; }
    std::filesystem::path tasks_kept() const { return out_dir / "tasks.decontaminated.jsonl"; }
    std::filesystem::path tasks_dropped() const { return out_dir / "tasks.dropped.jsonl"; }
    std::filesystem::path results(const std::string& endpoint) const {
        return out_dir / ("results." + endpoint + ".jsonl");
    }
    std::filesystem::path report(const std::string& endpoint, const std::string& ext) const {
        return out_dir / ("report." + endpoint + "." + ext);
    }
    std::filesystem::path corpus() const { return out_dir / "corpus.jsonl"; }
    std::filesystem::path stats_txt() const { return out_dir / "stats.txt"; }
    std::filesystem::path stats_json() const { return out_dir / "stats.json"; }
    std::filesystem::path manifest() const { return out_dir / "run-manifest.json"; }
    std::filesystem::path index_dir(const PipelineConfig& cfg) const { return cfg.index_dir; }

    // The evaluate/corpus/stats input: decontaminated tasks when that stage
    // has run, the raw tasks otherwise.
    std::filesystem::path current_tasks() const {
        return std::filesystem::exists(tasks_kept()) ? tasks_kept() : tasks();
    }
};

// ---------------------------------------------------------------------------
// JSONL (de)serialization

namespace artifact {

inline nlohmann::json snapshot_to_json(const RepoSnapshot& snap) {
    nlohmann::json j;
    j["schema"] = 1;
    j["repo_id"] = snap.repo_id;
    j["root"] = snap.root.generic_string();
    j["test_command"] = snap.test_command;
    nlohmann::json meta;
    if (snap.meta.stars) meta["stars"] = *snap.meta.stars;
    if (snap.meta.commit) meta["commit"] = *snap.meta.commit;
    meta["directory_count"] = snap.meta.directory_count;
    j["meta"] = std::move(meta);
    auto files = nlohmann::json::array();
    for (const auto& f : snap.files) {
        files.push_back({{"path", f.path},
                         {"content", f.content},
                         {"language", to_string(f.language)},
                         {"line_count", f.line_count},
                         {"token_count", f.token_count},
                         {"content_hash", to_hex16(f.content_hash)}});
    }
    j["files"] = std::move(files);
    return j;
}

inline RepoSnapshot snapshot_from_json(const nlohmann::json& j) {
    RepoSnapshot snap;
    snap.repo_id = j.at("repo_id").get<std::string>();
    snap.root = j.at("root").get<std::string>();
    snap.test_command = j.at("test_command").get<std::string>();
    if (j.contains("meta")) {
        const auto& m = j["meta"];
        if (m.contains("stars")) snap.meta.stars = m["stars"].get<uint64_t>();
        if (m.contains("commit")) snap.meta.commit = m["commit"].get<std::string>();
        if (m.contains("directory_count")) snap.meta.directory_count = m["directory_count"];
    }
    for (const auto& fj : j.at("files")) {
        SourceFile f;
        f.path = fj.at("path").get<std::string>();
        f.content = fj.at("content").get<std::string>();
        f.language = language_from_string(fj.at("language").get<std::string>());
        f.line_count = fj.at("line_count");
        f.token_count = fj.at("token_count");
        f.content_hash = fnv1a64(f.content);
        snap.files.push_back(std::move(f));
    }
    return snap;
}

// One benchmark task line: id, repo, file_path, level, prefix, middle,
// suffix, context, tests_cmd, meta.
struct TaskRecord {
    MaskTask task;
    std::vector<ContextEntry> context;
    std::string tests_cmd;
    size_t context_tokens = 0;
};

inline nlohmann::json task_to_json(const TaskRecord& rec) {
    nlohmann::json j;
    j["schema"] = 1;
    j["id"] = rec.task.task_id;
    j["repo"] = rec.task.repo_id;
    j["file_path"] = rec.task.file_path;
    j["level"] = to_string(rec.task.level);
    j["prefix"] = rec.task.prefix;
    j["middle"] = rec.task.middle;
    j["suffix"] = rec.task.suffix;
    auto ctx = nlohmann::json::array();
    for (const auto& e : rec.context)
        ctx.push_back({{"path", e.path}, {"content", e.content}});
    j["context"] = std::move(ctx);
    j["tests_cmd"] = rec.tests_cmd;
    j["meta"] = {{"language", to_string(rec.task.language)},
                 {"seed", rec.task.seed},
                 {"middle_tokens", rec.task.middle_token_count},
                 {"node_kind", rec.task.node_kind},
                 {"context_tokens", rec.context_tokens}};
    return j;
}

inline TaskRecord task_from_json(const nlohmann::json& j) {
    TaskRecord rec;
    rec.task.task_id = j.at("id").get<std::string>();
    rec.task.repo_id = j.at("repo").get<std::string>();
    rec.task.file_path = j.at("file_path").get<std::string>();
    auto level = mask_level_from_string(j.at("level").get<std::string>());
    if (!level) throw StageError("task record has unknown level");
    rec.task.level = *level;
    rec.task.prefix = j.at("prefix").get<std::string>();
    rec.task.middle = j.at("middle").get<std::string>();
    rec.task.suffix = j.at("suffix").get<std::string>();
    for (const auto& e : j.at("context"))
        rec.context.push_back(
            {e.at("path").get<std::string>(), e.at("content").get<std::string>(), 0});
    rec.tests_cmd = j.at("tests_cmd").get<std::string>();
    if (j.contains("meta")) {
        const auto& m = j["meta"];
        if (m.contains("language"))
            rec.task.language = language_from_string(m["language"].get<std::string>());
        if (m.contains("seed")) rec.task.seed = m["seed"].get<uint64_t>();
        if (m.contains("middle_tokens")) rec.task.middle_token_count = m["middle_tokens"];
        if (m.contains("node_kind")) rec.task.node_kind = m["node_kind"].get<std::string>();
        if (m.contains("context_tokens")) rec.context_tokens = m["context_tokens"];
    }
    return rec;
}

struct ResultRecord {
    std::string task_id;
    MaskLevel level = MaskLevel::Expression;
    std::string language;
    OutcomeStatus status = OutcomeStatus::Fail;
    std::optional<int> exit_code;
    double duration_seconds = 0.0;
    double es = 0.0;
    bool exact = false;
    std::string generated;
    int attempts = 0;
    int http_status = 0;
    std::string stdout_tail;
    std::string stderr_tail;
    std::string detail;
};

inline nlohmann::json result_to_json(const ResultRecord& r) {
    nlohmann::json j;
    j["schema"] = 1;
    j["task_id"] = r.task_id;
    j["level"] = to_string(r.level);
    j["language"] = r.language;
    j["status"] = to_string(r.status);
    if (r.exit_code) j["exit_code"] = *r.exit_code;
    j["duration_seconds"] = r.duration_seconds;
    j["es"] = r.es;
    j["exact"] = r.exact;
    j["generated"] = r.generated;
    j["attempts"] = r.attempts;
    j["http_status"] = r.http_status;
    j["stdout_tail"] = r.stdout_tail;
    j["stderr_tail"] = r.stderr_tail;
    j["detail"] = r.detail;
    return j;
}

inline ResultRecord result_from_json(const nlohmann::json& j) {
    ResultRecord r;
    r.task_id = j.at("task_id").get<std::string>();
    auto level = mask_level_from_string(j.at("level").get<std::string>());
    if (level) r.level = *level;
    if (j.contains("language")) r.language = j["language"].get<std::string>();
    auto status = outcome_from_string(j.at("status").get<std::string>());
    if (!status) throw StageError("result record has unknown status");
    r.status = *status;
    if (j.contains("exit_code")) r.exit_code = j["exit_code"].get<int>();
    if (j.contains("duration_seconds")) r.duration_seconds = j["duration_seconds"];
    if (j.contains("es")) r.es = j["es"];
    if (j.contains("exact")) r.exact = j["exact"];
    if (j.contains("generated")) r.generated = j["generated"].get<std::string>();
    if (j.contains("attempts")) r.attempts = j["attempts"];
    if (j.contains("http_status")) r.http_status = j["http_status"];
    if (j.contains("detail")) r.detail = j["detail"].get<std::string>();
    return r;
}

template <typename T, typename Fn>
inline std::vector<T> read_jsonl(const std::filesystem::path& path, Fn from_json) {
    auto bytes = read_file_bytes(path);
    if (!bytes) throw MissingArtifactError("missing artifact: " + path.string());
    std::vector<T> out;
    std::string_view sv(*bytes);
    size_t start = 0;
    size_t line_no = 0;
    while (start < sv.size()) {
        size_t nl = sv.find('\n', start);
        std::string_view line =
            sv.substr(start, nl == std::string_view::npos ? sv.size() - start : nl - start);
        ++line_no;
        if (!line.empty()) {
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded())
                throw StageError("malformed JSONL at " + path.string() + ":" +
                                 std::to_string(line_no));
            out.push_back(from_json(j));
        }
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return out;
}

} // namespace artifact

// ---------------------------------------------------------------------------
// Run manifest / resumability

namespace detail {

class RunManifest {
public:
    explicit RunManifest(const std::filesystem::path& path) : path_(path) {
        auto bytes = read_file_bytes(path);
        if (bytes) {
            auto j = nlohmann::json::parse(*bytes, nullptr, false);
            if (!j.is_discarded() && j.is_object()) data_ = j;
        }
        if (!data_.contains("stages")) data_["stages"] = nlohmann::json::object();
    }

    // True when the recorded run of `stage` matches the current config hash,
    // input hashes and still-existing outputs.
    bool is_current(const std::string& stage, uint64_t config_hash,
                    const std::vector<std::filesystem::path>& inputs,
                    const std::vector<std::filesystem::path>& outputs) const {
        if (!data_["stages"].contains(stage)) return false;
        const auto& entry = data_["stages"][stage];
        if (entry.value("config_hash", std::string{}) != to_hex16(config_hash)) return false;
        for (const auto& in : inputs) {
            auto key = in.generic_string();
            if (!entry["inputs"].contains(key)) return false;
            if (!std::filesystem::exists(in)) return false;
            if (entry["inputs"][key] != to_hex16(hash_file_bytes(in))) return false;
        }
        for (const auto& out : outputs) {
            auto key = out.generic_string();
            if (!entry["outputs"].contains(key)) return false;
            if (!std::filesystem::exists(out)) return false;
            if (entry["outputs"][key] != to_hex16(hash_file_bytes(out))) return false;
        }
        return true;
    }

    void record(const std::string& stage, uint64_t config_hash,
                const std::vector<std::filesystem::path>& inputs,
                const std::vector<std::filesystem::path>& outputs) {
        nlohmann::json entry;
        entry["config_hash"] = to_hex16(config_hash);
        entry["inputs"] = nlohmann::json::object();
        entry["outputs"] = nlohmann::json::object();
        for (const auto& in : inputs)
            entry["inputs"][in.generic_string()] = to_hex16(hash_file_bytes(in));
        for (const auto& out : outputs)
            entry["outputs"][out.generic_string()] = to_hex16(hash_file_bytes(out));
        data_["stages"][stage] = std::move(entry);
        write_file(path_, data_.dump(2) + "\n");
    }

private:
    std::filesystem::path path_;
    nlohmann::json data_;
};

inline uint64_t stage_seed(uint64_t global_seed, std::string_view repo, std::string_view path,
                           MaskLevel level, uint64_t draw) {
    uint64_t h = global_seed;
    h = hash_combine(h, fnv1a64(repo));
    h = hash_combine(h, fnv1a64(path));
    h = hash_combine(h, static_cast<uint64_t>(level));
    h = hash_combine(h, draw);
    return h;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Stages

struct StageOptions {
    std::string endpoint;       // evaluate/report: profile name or "oracle"
    bool keep_workdirs = false; // evaluate: retain sandbox directories
    ReportOptions report;       // report: grouping and averaging
};

inline void stage_ingest(const PipelineConfig& cfg) {
    ArtifactPaths paths{cfg.out_dir};
    detail::RunManifest manifest(paths.manifest());
    if (manifest.is_current("ingest", cfg.config_hash, {}, {paths.snapshots()})) {
        std::cerr << "ingest: up to date, skipping\n";
        return;
    }
    auto tokenizer = make_tokenizer(cfg.tokenizer_name);
    std::string out;
    for (const auto& repo : cfg.repos) {
        auto snap = scan_repository(repo.path, cfg.ingest, *tokenizer, repo.name,
                                    repo.test_command);
        out += artifact::snapshot_to_json(snap).dump();
        out += "\n";
    }
    write_file(paths.snapshots(), out);
    manifest.record("ingest", cfg.config_hash, {}, {paths.snapshots()});
}

inline std::vector<RepoSnapshot> load_snapshots(const ArtifactPaths& paths) {
    return artifact::read_jsonl<RepoSnapshot>(paths.snapshots(), artifact::snapshot_from_json);
}

inline void stage_generate(const PipelineConfig& cfg) {
    ArtifactPaths paths{cfg.out_dir};
    detail::RunManifest manifest(paths.manifest());
    if (manifest.is_current("generate", cfg.config_hash, {paths.snapshots()}, {paths.tasks()})) {
        std::cerr << "generate: up to date, skipping\n";
        return;
    }
    auto snapshots = load_snapshots(paths);
    auto tokenizer = make_tokenizer(cfg.tokenizer_name);

    std::string out;
    size_t emitted = 0;
    for (const auto& snap : snapshots) {
        std::set<std::string> seen_ids;
        for (const auto& file : snap.files) {
            if (!has_grammar(file.language)) continue; // maskable set: parseable files
            std::optional<SyntaxTree> tree;
            for (auto level : cfg.levels) {
                std::vector<MaskTask> tasks;
                if (is_grammar_level(level)) {
                    if (!tree) tree = parse_source(file);
                    auto candidates =
                        enumerate_candidates(*tree, file, level, cfg.carve, *tokenizer);
                    if (candidates.empty()) continue;
                    // Seeded partial shuffle picks tasks_per_file candidates.
                    Rng rng(detail::stage_seed(cfg.seed, snap.repo_id, file.path, level, 0));
                    std::vector<size_t> order(candidates.size());
                    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
                    size_t take = std::min(cfg.tasks_per_file, candidates.size());
                    for (size_t i = 0; i < take; ++i) {
                        size_t j = i + rng.below(order.size() - i);
                        std::swap(order[i], order[j]);
                    }
                    for (size_t i = 0; i < take; ++i)
                        tasks.push_back(carve_task(file, candidates[order[i]],
                                                   detail::stage_seed(cfg.seed, snap.repo_id,
                                                                      file.path, level, i),
                                                   snap.repo_id, *tokenizer));
                } else {
                    for (size_t draw = 0; draw < cfg.tasks_per_file; ++draw) {
                        auto seed =
                            detail::stage_seed(cfg.seed, snap.repo_id, file.path, level, draw);
                        auto task =
                            carve_random(file, level, cfg.carve, seed, snap.repo_id, *tokenizer);
                        if (task) tasks.push_back(std::move(*task));
                    }
                }
                for (auto& task : tasks) {
                    if (!seen_ids.insert(task.task_id).second) continue; // dedupe
                    auto prefix_tokens = tokenizer->count(task.prefix);
                    auto suffix_tokens = tokenizer->count(task.suffix);
                    auto budget = derive_budget(cfg.max_total_tokens, cfg.headroom_tokens,
                                                prefix_tokens, suffix_tokens);
                    auto bundle = rank_and_truncate(snap, task, budget, *tokenizer);
                    artifact::TaskRecord rec;
                    rec.task = std::move(task);
                    rec.context = std::move(bundle.entries);
                    rec.tests_cmd = snap.test_command;
                    rec.context_tokens = bundle.total_tokens;
                    out += artifact::task_to_json(rec).dump();
                    out += "\n";
                    ++emitted;
                }
            }
        }
    }
    write_file(paths.tasks(), out);
    std::cerr << "generate: " << emitted << " tasks\n";
    manifest.record("generate", cfg.config_hash, {paths.snapshots()}, {paths.tasks()});
}

inline std::vector<artifact::TaskRecord> load_tasks(const std::filesystem::path& path) {
    return artifact::read_jsonl<artifact::TaskRecord>(path, artifact::task_from_json);
}

inline void stage_decontaminate(const PipelineConfig& cfg, size_t n_override = 0,
                                const std::filesystem::path& index_dir_override = {},
                                bool rebuild_index = false) {
    ArtifactPaths paths{cfg.out_dir};
    detail::RunManifest manifest(paths.manifest());
    if (manifest.is_current("decontaminate", cfg.config_hash, {paths.tasks()},
                            {paths.tasks_kept(), paths.tasks_dropped()})) {
        std::cerr << "decontaminate: up to date, skipping\n";
        return;
    }
    size_t n = n_override ? n_override : cfg.ngram_n;
    auto index_dir = index_dir_override.empty() ? cfg.index_dir : index_dir_override;

    NGramIndex index;
    if (!rebuild_index && std::filesystem::exists(index_dir / kIndexFileName)) {
        index = load_ngram_index(index_dir);
        if (index.n != n)
            throw StageError("persisted index has n=" + std::to_string(index.n) +
                             " but n=" + std::to_string(n) + " requested; rebuild it");
    } else if (!cfg.reference_paths.empty()) {
        index = build_ngram_index(cfg.reference_paths, n);
        save_ngram_index(index, index_dir);
    } else {
        index.n = n; // empty index: nothing to drop
    }

    auto records = load_tasks(paths.tasks());
    std::vector<MaskTask> tasks;
    tasks.reserve(records.size());
    for (const auto& r : records) tasks.push_back(r.task);
    auto [kept, dropped] = filter_tasks(tasks, index);

    std::set<std::string> kept_ids;
    for (const auto& t : kept) kept_ids.insert(t.task_id);
    std::string kept_out, dropped_out;
    for (const auto& rec : records) {
        auto line = artifact::task_to_json(rec).dump() + "\n";
        if (kept_ids.count(rec.task.task_id))
            kept_out += line;
        else
            dropped_out += line;
    }
    write_file(paths.tasks_kept(), kept_out);
    write_file(paths.tasks_dropped(), dropped_out);
    std::cerr << "decontaminate: kept " << kept.size() << ", dropped " << dropped.size() << "\n";
    manifest.record("decontaminate", cfg.config_hash, {paths.tasks()},
                    {paths.tasks_kept(), paths.tasks_dropped()});
}

// The built-in "oracle" endpoint feeds each task's ground-truth middle back;
// it validates benchmark construction (originals must pass their tests).
inline constexpr const char* kOracleEndpoint = "oracle";

inline void stage_evaluate(const PipelineConfig& cfg, const StageOptions& options) {
    ArtifactPaths paths{cfg.out_dir};
    detail::RunManifest manifest(paths.manifest());
    std::string endpoint_name = options.endpoint.empty() ? kOracleEndpoint : options.endpoint;
    auto tasks_path = paths.current_tasks();
    auto results_path = paths.results(endpoint_name);
    std::string stage_key = "evaluate." + endpoint_name;
    if (manifest.is_current(stage_key, cfg.config_hash, {tasks_path}, {results_path})) {
        std::cerr << "evaluate: up to date, skipping\n";
        return;
    }

    auto snapshots = load_snapshots(paths);
    std::map<std::string, const RepoSnapshot*> by_repo;
    for (const auto& s : snapshots) by_repo[s.repo_id] = &s;
    auto records = load_tasks(tasks_path);
    auto tokenizer = make_tokenizer(cfg.tokenizer_name);

    // Obtain middles: ground truth for the oracle, HTTP completions otherwise.
    std::vector<CompletionResult> completions(records.size());
    if (endpoint_name == kOracleEndpoint) {
        for (size_t i = 0; i < records.size(); ++i) {
            completions[i].text = records[i].task.middle;
            completions[i].attempts = 0;
        }
    } else {
        auto it = cfg.endpoints.find(endpoint_name);
        if (it == cfg.endpoints.end())
            throw ConfigError("unknown endpoint profile: " + endpoint_name);
        const auto& endpoint = it->second;
        std::vector<PromptRendering> renderings;
        renderings.reserve(records.size());
        for (const auto& rec : records) {
            ContextBundle bundle;
            bundle.entries = rec.context;
            for (auto& e : bundle.entries) e.token_count = tokenizer->count(e.content);
            for (const auto& e : bundle.entries) bundle.total_tokens += e.token_count;
            renderings.push_back(endpoint.mode == PromptMode::Fim
                                     ? render_fim_prompt(rec.task, bundle, endpoint, *tokenizer,
                                                         cfg.max_total_tokens)
                                     : render_chat_prompt(rec.task, bundle, endpoint, *tokenizer,
                                                          cfg.max_total_tokens));
        }
        completions = request_completions(endpoint, renderings, cfg.retry,
                                          cfg.request_concurrency);
    }

    SandboxSpec sandbox = cfg.sandbox;
    sandbox.keep_workdir = options.keep_workdirs;
    std::vector<EvalJob> jobs(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        auto snap_it = by_repo.find(rec.task.repo_id);
        if (snap_it == by_repo.end())
            throw StageError("task references unknown repo: " + rec.task.repo_id);
        jobs[i].snapshot = snap_it->second;
        jobs[i].task = &records[i].task;
        if (completions[i].ok()) {
            jobs[i].middle = completions[i].text;
        } else {
            jobs[i].generation_failed = true;
            jobs[i].generation_error = *completions[i].error;
        }
    }
    auto outcomes = run_eval_jobs(jobs, sandbox, cfg.effective_sandbox_workers());

    std::string out;
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        artifact::ResultRecord r;
        r.task_id = rec.task.task_id;
        r.level = rec.task.level;
        r.language = to_string(rec.task.language);
        r.status = outcomes[i].status;
        r.exit_code = outcomes[i].exit_code;
        r.duration_seconds = outcomes[i].duration_seconds;
        r.generated = completions[i].ok() ? completions[i].text : "";
        r.attempts = completions[i].attempts;
        r.http_status = completions[i].http_status;
        r.stdout_tail = outcomes[i].stdout_tail;
        r.stderr_tail = outcomes[i].stderr_tail;
        r.detail = outcomes[i].detail;
        if (completions[i].ok()) {
            r.es = edit_similarity(r.generated, rec.task.middle);
            r.exact = r.generated == rec.task.middle;
        }
        out += artifact::result_to_json(r).dump();
        out += "\n";
    }
    write_file(results_path, out);
    manifest.record(stage_key, cfg.config_hash, {tasks_path}, {results_path});
}

// ---------------------------------------------------------------------------
// Report rendering

inline std::string render_report_text(const Report& report) {
    char buf[256];
    std::string out;
    out += "category                count     ES     Pass@1  harness_err\n";
    auto line = [&](const ReportRow& row) {
        std::snprintf(buf, sizeof(buf), "%-22s %6zu  %6.1f  %6.1f  %6zu\n", row.key.c_str(),
                      row.count, row.mean_es, row.pass_at_1, row.harness_errors);
        out += buf;
    };
    for (const auto& row : report.rows) line(row);
    out += "----\n";
    line(report.average);
    for (const auto& [k, v] : report.metadata) out += "# " + k + ": " + v + "\n";
    return out;
}

inline nlohmann::json report_to_json(const Report& report) {
    nlohmann::json j;
    j["schema"] = 1;
    auto row_json = [](const ReportRow& row) {
        return nlohmann::json{{"key", row.key},
                              {"count", row.count},
                              {"es", row.mean_es},
                              {"pass_at_1", row.pass_at_1},
                              {"harness_errors", row.harness_errors}};
    };
    auto rows = nlohmann::json::array();
    for (const auto& row : report.rows) rows.push_back(row_json(row));
    j["rows"] = std::move(rows);
    j["average"] = row_json(report.average);
    j["average_mode"] = report.average_mode == AverageMode::Macro ? "macro" : "micro";
    j["group_by"] = report.group_by == ReportGroupBy::Level ? "level" : "language";
    j["metadata"] = report.metadata;
    return j;
}

inline std::string render_report_csv(const Report& report) {
    std::string out = "key,count,es,pass_at_1,harness_errors\n";
    char buf[256];
    auto line = [&](const ReportRow& row) {
        std::snprintf(buf, sizeof(buf), "%s,%zu,%.6f,%.6f,%zu\n", row.key.c_str(), row.count,
                      row.mean_es, row.pass_at_1, row.harness_errors);
        out += buf;
    };
    for (const auto& row : report.rows) line(row);
    line(report.average);
    return out;
}

inline Report build_report(const PipelineConfig& cfg, const std::string& endpoint_name,
                           const std::vector<artifact::ResultRecord>& results,
                           const ReportOptions& options) {
    std::vector<ScoreRecord> scores;
    scores.reserve(results.size());
    bool any_class = false;
    for (const auto& r : results) {
        scores.push_back({r.task_id, r.level, r.language, r.es, r.exact, r.status});
        if (r.level == MaskLevel::Class) any_class = true;
    }
    ReportOptions opts = options;
    if (any_class) opts.include_class_level = true;
    auto report = aggregate_report(scores, opts);
    report.metadata["endpoint"] = endpoint_name;
    report.metadata["tokenizer"] = cfg.tokenizer_name;
    report.metadata["max_total_tokens"] = std::to_string(cfg.max_total_tokens);
    report.metadata["seed"] = std::to_string(cfg.seed);
    report.metadata["es_convention"] = "generation_error excluded from ES mean";
    report.metadata["pass_convention"] =
        "generation_error counts as fail; harness_error excluded";
    if (auto it = cfg.endpoints.find(endpoint_name); it != cfg.endpoints.end())
        report.metadata["mode"] = to_string(it->second.mode);
    else if (endpoint_name == kOracleEndpoint)
        report.metadata["mode"] = "oracle";
    return report;
}

inline void stage_report(const PipelineConfig& cfg, const StageOptions& options) {
    ArtifactPaths paths{cfg.out_dir};
    std::string endpoint_name = options.endpoint.empty() ? kOracleEndpoint : options.endpoint;
    auto results = artifact::read_jsonl<artifact::ResultRecord>(paths.results(endpoint_name),
                                                                artifact::result_from_json);
    auto report = build_report(cfg, endpoint_name, results, options.report);
    write_file(paths.report(endpoint_name, "txt"), render_report_text(report));
    write_file(paths.report(endpoint_name, "json"), report_to_json(report).dump(2) + "\n");
    write_file(paths.report(endpoint_name, "csv"), render_report_csv(report));
    std::cout << render_report_text(report);
}

inline void stage_corpus(const PipelineConfig& cfg) {
    ArtifactPaths paths{cfg.out_dir};
    detail::RunManifest manifest(paths.manifest());
    auto tasks_path = paths.current_tasks();
    if (manifest.is_current("corpus", cfg.config_hash, {tasks_path}, {paths.corpus()})) {
        std::cerr << "corpus: up to date, skipping\n";
        return;
    }
    auto records = load_tasks(tasks_path);
    auto tokenizer = make_tokenizer(cfg.tokenizer_name);

    std::vector<CorpusSample> completions;
    for (const auto& rec : records) {
        ContextBundle bundle;
        if (cfg.corpus_context_mode != CorpusContextMode::InFile) {
            bundle.entries = rec.context;
            for (auto& e : bundle.entries) e.token_count = tokenizer->count(e.content);
            for (const auto& e : bundle.entries) bundle.total_tokens += e.token_count;
        }
        auto sample = emit_completion_sample(rec.task, bundle, cfg.corpus_template, *tokenizer,
                                             cfg.max_total_tokens);
        if (cfg.corpus_context_mode == CorpusContextMode::Both) {
            sample.sample_id += "-ctx";
            completions.push_back(sample);
            ContextBundle empty;
            auto in_file = emit_completion_sample(rec.task, empty, cfg.corpus_template,
                                                  *tokenizer, cfg.max_total_tokens);
            in_file.sample_id += "-nocx";
            completions.push_back(std::move(in_file));
        } else {
            completions.push_back(std::move(sample));
        }
    }

    std::vector<CorpusSample> qa;
    if (!cfg.qa_path.empty()) {
        auto qa_records = load_qa_jsonl(cfg.qa_path);
        for (size_t i = 0; i < qa_records.size(); ++i)
            qa.push_back(make_qa_sample(qa_records[i], i));
    }

    MixturePolicy policy = cfg.mixture;
    policy.rng_seed = hash_combine(cfg.seed, fnv1a64("corpus-mix"));
    auto mixed = mix_streams(completions, qa, policy);
    write_file(paths.corpus(), corpus_to_jsonl(mixed));
    std::cerr << "corpus: " << mixed.size() << " samples\n";
    manifest.record("corpus", cfg.config_hash, {tasks_path}, {paths.corpus()});
}

// Repository overview block (repo/dir/star/file counts across snapshots).
struct RepoOverview {
    size_t repositories = 0;
    StatsSummary directories;
    StatsSummary stars;
    StatsSummary files;
    StatsSummary python_files;
    StatsSummary other_files;
    bool any_stars = false;
};

inline RepoOverview repo_overview(const std::vector<RepoSnapshot>& snapshots) {
    RepoOverview o;
    o.repositories = snapshots.size();
    std::vector<size_t> dirs, stars, files, python, other;
    for (const auto& s : snapshots) {
        dirs.push_back(s.meta.directory_count);
        if (s.meta.stars) {
            stars.push_back(*s.meta.stars);
            o.any_stars = true;
        }
        auto counts = count_languages(s);
        files.push_back(counts.total);
        python.push_back(counts.python);
        other.push_back(counts.other);
    }
    o.directories = StatsSummary::of(dirs);
    o.stars = StatsSummary::of(stars);
    o.files = StatsSummary::of(files);
    o.python_files = StatsSummary::of(python);
    o.other_files = StatsSummary::of(other);
    return o;
}

inline std::string render_overview_text(const RepoOverview& o) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "repositories %zu  directories %s  stars %s  files %s  python_files %s  "
                  "other_files %s\n",
                  o.repositories, format_stat_cell(o.directories).c_str(),
                  o.any_stars ? format_stat_cell(o.stars).c_str() : "n/a",
                  format_stat_cell(o.files).c_str(), format_stat_cell(o.python_files).c_str(),
                  format_stat_cell(o.other_files).c_str());
    out += buf;
    return out;
}

inline std::string render_stats_text(const StatsTable& table) {
    std::string out;
    char buf[256];
    out += "category             samples  context            prefix             middle           "
           "  suffix\n";
    for (const auto& row : table.rows) {
        std::snprintf(buf, sizeof(buf), "%-20s %7zu  %-17s  %-17s  %-17s  %-17s\n",
                      row.category.c_str(), row.count, format_stat_cell(row.context_tokens).c_str(),
                      format_stat_cell(row.prefix_tokens).c_str(),
                      format_stat_cell(row.middle_tokens).c_str(),
                      format_stat_cell(row.suffix_tokens).c_str());
        out += buf;
    }
    out += "# cells are min/max/mean " + table.tokenizer_name + " tokens\n";
    return out;
}

inline nlohmann::json stats_to_json(const StatsTable& table) {
    nlohmann::json j;
    j["schema"] = 1;
    j["tokenizer"] = table.tokenizer_name;
    auto rows = nlohmann::json::array();
    for (const auto& row : table.rows) {
        auto cell = [](const StatsSummary& s) {
            return nlohmann::json{{"min", s.min}, {"max", s.max}, {"mean", s.mean},
                                  {"cell", format_stat_cell(s)}};
        };
        rows.push_back({{"category", row.category},
                        {"samples", row.count},
                        {"context_tokens", cell(row.context_tokens)},
                        {"prefix_tokens", cell(row.prefix_tokens)},
                        {"middle_tokens", cell(row.middle_tokens)},
                        {"suffix_tokens", cell(row.suffix_tokens)}});
    }
    j["rows"] = std::move(rows);
    return j;
}

inline void stage_stats(const PipelineConfig& cfg) {
    ArtifactPaths paths{cfg.out_dir};
    auto records = load_tasks(paths.current_tasks());
    auto tokenizer = make_tokenizer(cfg.tokenizer_name);
    std::vector<MaskTask> tasks;
    std::map<std::string, size_t> context_tokens;
    for (const auto& rec : records) {
        tasks.push_back(rec.task);
        context_tokens[rec.task.task_id] = rec.context_tokens;
    }
    auto table = dataset_stats(tasks, context_tokens, *tokenizer);
    std::string text = render_stats_text(table);
    auto json = stats_to_json(table);
    if (std::filesystem::exists(paths.snapshots())) {
        auto overview = repo_overview(load_snapshots(paths));
        text += render_overview_text(overview);
        json["overview"] = {{"repositories", overview.repositories},
                            {"directories", format_stat_cell(overview.directories)},
                            {"stars", overview.any_stars ? format_stat_cell(overview.stars)
                                                         : "n/a"},
                            {"files", format_stat_cell(overview.files)},
                            {"python_files", format_stat_cell(overview.python_files)},
                            {"other_files", format_stat_cell(overview.other_files)}};
    }
    write_file(paths.stats_txt(), text);
    write_file(paths.stats_json(), json.dump(2) + "\n");
    std::cout << text;
}

// ---------------------------------------------------------------------------
// Orchestration

inline const std::vector<std::string>& all_stage_names() {
    static const std::vector<std::string> names = {
        "ingest", "generate", "decontaminate", "evaluate", "report", "corpus", "stats"};
    return names;
}

// Runs the requested stages in pipeline order. Returns 0 on success, 1 on a
// stage failure, 2 on validation/missing-artifact problems.
inline int run_pipeline(const PipelineConfig& cfg, std::vector<std::string> stages,
                        const StageOptions& options) {
    if (stages.empty()) stages = all_stage_names();
    // Keep canonical order regardless of how the subset was given.
    std::vector<std::string> ordered;
    for (const auto& name : all_stage_names())
        if (std::find(stages.begin(), stages.end(), name) != stages.end())
            ordered.push_back(name);
    for (const auto& requested : stages)
        if (std::find(all_stage_names().begin(), all_stage_names().end(), requested) ==
            all_stage_names().end()) {
            std::cerr << "error: unknown stage '" << requested << "'\n";
            return 2;
        }

    for (const auto& stage : ordered) {
        try {
            if (stage == "ingest") stage_ingest(cfg);
            else if (stage == "generate") stage_generate(cfg);
            else if (stage == "decontaminate") stage_decontaminate(cfg);
            else if (stage == "evaluate") stage_evaluate(cfg, options);
            else if (stage == "report") stage_report(cfg, options);
            else if (stage == "corpus") stage_corpus(cfg);
            else if (stage == "stats") stage_stats(cfg);
        } catch (const MissingArtifactError& e) {
            std::cerr << "error: " << stage << ": " << e.what()
                      << " (run the preceding stage first)\n";
            return 2;
        } catch (const ConfigError& e) {
            std::cerr << "error: " << stage << ": " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << stage << " failed: " << e.what() << "\n";
            return 1;
        }
    }
    return 0;
}

} // namespace repofim
