// Acceptance suite: every criterion runs at its stated tolerance and prints
// one PASS/FAIL line. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "repofim/pipeline.hpp"

using namespace repofim;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s  %2d. %-28s %s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path fixtures_dir() { return {REPOFIM_FIXTURES_DIR}; }

fs::path make_temp_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() /
               ("repofim-accept-" + tag + "-" + to_hex16(static_cast<uint64_t>(::getpid())));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

nlohmann::json full_config_json(const fs::path& out_dir) {
    nlohmann::json j;
    j["seed"] = 7;
    j["out_dir"] = out_dir.string();
    j["repos"] = nlohmann::json::array();
    for (const char* repo : {"calculator", "bank", "textkit"}) {
        j["repos"].push_back({{"name", repo},
                              {"path", (fixtures_dir() / repo).string()},
                              {"test_command", "python3 run_tests.py"}});
    }
    j["mask"] = {{"levels",
                  {"random_span", "random_single_line", "random_multi_line", "expression",
                   "statement", "function", "class"}},
                 {"tasks_per_file", 60}};
    j["sandbox"] = {{"timeout_seconds", 120}, {"workers", 4}};
    return j;
}

PipelineConfig load_config_json(const fs::path& dir, const nlohmann::json& j) {
    auto path = dir / "config.json";
    write_file(path, j.dump(2));
    auto loaded = load_config(path);
    if (!loaded.ok()) {
        for (const auto& e : loaded.errors) std::fprintf(stderr, "config error: %s\n", e.c_str());
        std::exit(3);
    }
    return loaded.config;
}

struct GeneratedSet {
    PipelineConfig cfg;
    std::vector<RepoSnapshot> snapshots;
    std::vector<artifact::TaskRecord> records;
    double build_seconds = 0.0;
};

GeneratedSet build_benchmark() {
    GeneratedSet out;
    auto dir = make_temp_dir("bench");
    out.cfg = load_config_json(dir, full_config_json(dir / "out"));
    auto start = std::chrono::steady_clock::now();
    stage_ingest(out.cfg);
    stage_generate(out.cfg);
    out.build_seconds = seconds_since(start);
    ArtifactPaths paths{out.cfg.out_dir};
    out.snapshots = load_snapshots(paths);
    out.records = load_tasks(paths.tasks());
    return out;
}

const SourceFile* find_file(const GeneratedSet& set, const std::string& repo,
                            const std::string& path) {
    for (const auto& s : set.snapshots)
        if (s.repo_id == repo) return s.find(path);
    return nullptr;
}

// --- criterion 1: round-trip construction ---

void criterion_round_trip(const GeneratedSet& set) {
    size_t mismatches = 0;
    std::set<MaskLevel> levels_seen;
    for (const auto& rec : set.records) {
        levels_seen.insert(rec.task.level);
        const auto* file = find_file(set, rec.task.repo_id, rec.task.file_path);
        if (!file || rec.task.prefix + rec.task.middle + rec.task.suffix != file->content)
            ++mismatches;
    }
    bool ok = set.records.size() >= 1000 && mismatches == 0 && levels_seen.size() == 7 &&
              set.build_seconds < 60.0;
    std::ostringstream detail;
    detail << set.records.size() << " tasks, " << levels_seen.size() << "/7 levels, "
           << mismatches << " mismatches, built in " << std::fixed << std::setprecision(1)
           << set.build_seconds << "s (limit 60s)";
    report(1, "round-trip construction", ok, detail.str());
}

// --- criterion 2: grammar soundness ---

void criterion_grammar_soundness(const GeneratedSet& set) {
    auto constraints = set.cfg.carve;
    size_t grammar_tasks = 0, sound = 0;
    std::map<std::pair<std::string, std::string>, SyntaxTree> parsed;
    for (const auto& rec : set.records) {
        if (!is_grammar_level(rec.task.level)) continue;
        ++grammar_tasks;
        const auto* file = find_file(set, rec.task.repo_id, rec.task.file_path);
        if (!file) continue;
        auto key = std::make_pair(rec.task.repo_id, rec.task.file_path);
        auto it = parsed.find(key);
        if (it == parsed.end()) it = parsed.emplace(key, parse_source(*file)).first;
        ByteRange range{rec.task.prefix.size(),
                        rec.task.prefix.size() + rec.task.middle.size()};
        if (range_has_whitelisted_node(it->second, range, rec.task.level, file->language,
                                       constraints))
            ++sound;
    }
    bool ok = grammar_tasks >= 500 && sound == grammar_tasks;
    std::ostringstream detail;
    detail << sound << "/" << grammar_tasks << " grammar tasks map to whitelisted nodes"
           << " (need >=500, 100%)";
    report(2, "grammar soundness", ok, detail.str());
}

// --- criterion 3: oracle evaluation ---

void criterion_oracle_eval(const GeneratedSet& set) {
    auto start = std::chrono::steady_clock::now();
    std::map<std::string, const RepoSnapshot*> by_repo;
    for (const auto& s : set.snapshots) by_repo[s.repo_id] = &s;

    std::vector<EvalJob> jobs(set.records.size());
    for (size_t i = 0; i < set.records.size(); ++i) {
        jobs[i].snapshot = by_repo.at(set.records[i].task.repo_id);
        jobs[i].task = &set.records[i].task;
        jobs[i].middle = set.records[i].task.middle; // ground truth
    }
    SandboxSpec spec = set.cfg.sandbox;
    auto outcomes = run_eval_jobs(jobs, spec, 4);

    std::vector<ScoreRecord> scores;
    size_t harness_errors = 0;
    for (size_t i = 0; i < outcomes.size(); ++i) {
        const auto& task = set.records[i].task;
        double es = edit_similarity(jobs[i].middle, task.middle);
        scores.push_back({task.task_id, task.level, to_string(task.language), es,
                          jobs[i].middle == task.middle, outcomes[i].status});
        if (outcomes[i].status == OutcomeStatus::HarnessError) ++harness_errors;
    }
    ReportOptions opts;
    opts.include_class_level = true;
    auto rep = aggregate_report(scores, opts);
    bool all_hundred = true;
    for (const auto& row : rep.rows) {
        if (row.count == 0) continue;
        if (std::abs(row.mean_es - 100.0) > 1e-9 || std::abs(row.pass_at_1 - 100.0) > 1e-9)
            all_hundred = false;
    }
    double elapsed = seconds_since(start);
    bool ok = all_hundred && harness_errors == 0 && elapsed < 600.0;
    std::ostringstream detail;
    detail << outcomes.size() << " oracle runs, ES=" << rep.average.mean_es
           << " Pass@1=" << rep.average.pass_at_1 << ", " << harness_errors
           << " harness errors, " << std::fixed << std::setprecision(1) << elapsed
           << "s with 4 workers (limit 600s)";
    report(3, "oracle evaluation", ok, detail.str());
}

// --- criterion 4: timeout contract ---

void criterion_timeout(const GeneratedSet& set) {
    const auto* file = find_file(set, "calculator", "calculator.py");
    if (!file) {
        report(4, "timeout contract", false, "calculator.py missing from snapshot");
        return;
    }
    size_t begin = file->content.find("PRECISION = 4");
    MaskCandidate cand{{begin, begin + std::string("PRECISION = 4").size()},
                       MaskLevel::Statement,
                       "assignment"};
    ApproxTokenizer tok;
    auto task = carve_task(*file, cand, 4, "calculator", tok);
    const RepoSnapshot* snap = nullptr;
    for (const auto& s : set.snapshots)
        if (s.repo_id == "calculator") snap = &s;

    SandboxSpec spec; // defaults: 120 s limit
    auto outcome = run_tests(*snap, task,
                             stitch(task, "import time; time.sleep(200); PRECISION = 4"), spec);
    bool ok = outcome.status == OutcomeStatus::Timeout && outcome.duration_seconds >= 120.0 &&
              outcome.duration_seconds <= 125.0;
    std::ostringstream detail;
    detail << "status=" << to_string(outcome.status) << ", duration=" << std::fixed
           << std::setprecision(2) << outcome.duration_seconds << "s (required [120, 125])";
    report(4, "timeout contract", ok, detail.str());
}

// --- criterion 5: pass@k estimator ---

double pass_at_k_brute_force(uint64_t n, uint64_t c, uint64_t k) {
    uint64_t total = 0, hit = 0;
    for (uint64_t mask = 0; mask < (1ull << n); ++mask) {
        if (static_cast<uint64_t>(__builtin_popcountll(mask)) != k) continue;
        ++total;
        if (mask & ((1ull << c) - 1)) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(total);
}

void criterion_pass_at_k() {
    size_t checked = 0;
    double worst = 0.0;
    for (uint64_t n = 1; n <= 8; ++n)
        for (uint64_t c = 0; c <= n; ++c)
            for (uint64_t k = 1; k <= n; ++k) {
                double err = std::abs(pass_at_k(n, c, k) - pass_at_k_brute_force(n, c, k));
                worst = std::max(worst, err);
                ++checked;
            }
    bool ok = worst < 1e-12;
    std::ostringstream detail;
    detail << checked << " (n,c,k) triples, max |error| = " << std::scientific << worst
           << " (tolerance 1e-12)";
    report(5, "pass@k estimator", ok, detail.str());
}

// --- criterion 6: edit similarity vs dp oracle ---

size_t levenshtein_full_matrix(const std::string& a, const std::string& b) {
    std::vector<std::vector<size_t>> d(a.size() + 1, std::vector<size_t>(b.size() + 1));
    for (size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (size_t i = 1; i <= a.size(); ++i)
        for (size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return d[a.size()][b.size()];
}

void criterion_edit_similarity() {
    Rng rng(616);
    double worst = 0.0;
    const int pairs = 10000;
    for (int i = 0; i < pairs; ++i) {
        auto make = [&](size_t max_len) {
            size_t len = rng.below(max_len + 1);
            std::string s(len, 'a');
            for (auto& ch : s) ch = static_cast<char>('a' + rng.below(5));
            return s;
        };
        std::string a = make(200), b = make(200);
        size_t dist = levenshtein_full_matrix(a, b);
        double expected = (a.empty() && b.empty())
                              ? 100.0
                              : 100.0 * (1.0 - static_cast<double>(dist) /
                                                   static_cast<double>(std::max(a.size(),
                                                                                b.size())));
        worst = std::max(worst, std::abs(edit_similarity(a, b) - expected));
    }
    bool ok = worst < 1e-9;
    std::ostringstream detail;
    detail << pairs << " random pairs (len <= 200), max |error| = " << std::scientific << worst
           << " (tolerance 1e-9)";
    report(6, "edit similarity", ok, detail.str());
}

// --- criterion 7: decontamination plants ---

void criterion_decontamination(const GeneratedSet& set) {
    auto dir = make_temp_dir("decontam");
    // Deterministic nonce-word reference corpus.
    std::string corpus;
    const int corpus_words = 4000;
    for (int i = 0; i < corpus_words; ++i) corpus += "refw" + std::to_string(i) + " ";
    write_file(dir / "reference.txt", corpus);
    auto index = build_ngram_index({dir / "reference.txt"}, 20);

    auto corpus_run = [&](int start, int count) {
        std::string out;
        for (int i = 0; i < count; ++i) {
            if (i) out += " ";
            out += "refw" + std::to_string(start + i);
        }
        return out;
    };

    const size_t plant_count = 250;
    Rng rng(7117);
    std::vector<MaskTask> planted20, planted19;
    for (size_t i = 0; i < plant_count; ++i) {
        const auto& base = set.records[i % set.records.size()].task;
        int offset = static_cast<int>(rng.below(corpus_words - 25));
        MaskTask with20 = base;
        with20.task_id = "p20-" + std::to_string(i);
        with20.middle = base.middle + "\nzzmark" + std::to_string(i) + " " +
                        corpus_run(offset, 20) + " zzend" + std::to_string(i);
        planted20.push_back(std::move(with20));
        MaskTask with19 = base;
        with19.task_id = "p19-" + std::to_string(i);
        with19.middle = base.middle + "\nzzmark" + std::to_string(i) + " " +
                        corpus_run(offset, 19) + " zzend" + std::to_string(i);
        planted19.push_back(std::move(with19));
    }
    auto [kept20, dropped20] = filter_tasks(planted20, index);
    auto [kept19, dropped19] = filter_tasks(planted19, index);
    bool ok = dropped20.size() == plant_count && dropped19.empty();
    std::ostringstream detail;
    detail << dropped20.size() << "/" << plant_count << " 20-gram plants dropped, "
           << dropped19.size() << "/" << plant_count << " 19-gram plants dropped (need all / none)";
    report(7, "decontamination", ok, detail.str());
}

// --- criterion 8: budget safety fuzz ---

void criterion_budget_safety() {
    ApproxTokenizer tok;
    Rng rng(88);
    const size_t cases = 1000;
    size_t violations = 0;
    size_t max_seen = 0;
    ModelEndpoint fim;
    fim.mode = PromptMode::Fim;
    ModelEndpoint chat;
    chat.mode = PromptMode::Chat;
    for (size_t i = 0; i < cases; ++i) {
        MaskTask task;
        task.file_path = "f.py";
        auto words = [&](const char* stem, size_t count) {
            std::string out;
            for (size_t w = 0; w < count; ++w) out += std::string(stem) + " ";
            return out;
        };
        task.prefix = words("p", rng.below(25000));
        task.suffix = words("s", rng.below(25000));
        task.middle = "m";
        ContextBundle bundle;
        size_t files = rng.below(4);
        for (size_t f = 0; f < files; ++f) {
            auto content = words("c", rng.below(20000));
            size_t tokens = tok.count(content);
            bundle.entries.push_back({"ctx" + std::to_string(f) + ".py", content, tokens});
            bundle.total_tokens += tokens;
        }
        auto r = (i % 2 == 0) ? render_fim_prompt(task, bundle, fim, tok, 32768)
                              : render_chat_prompt(task, bundle, chat, tok, 32768);
        max_seen = std::max(max_seen, r.token_count);
        if (r.token_count > 32768) ++violations;
    }
    bool ok = violations == 0;
    std::ostringstream detail;
    detail << cases << " fuzzed renderings, max tokens " << max_seen << " (ceiling 32768), "
           << violations << " violations";
    report(8, "budget safety", ok, detail.str());
}

// --- criterion 9: stats table ---

void criterion_stats() {
    // A hand-built three-task fixture fed through the real stats stage.
    auto dir = make_temp_dir("stats");
    nlohmann::json j;
    j["seed"] = 1;
    j["out_dir"] = (dir / "out").string();
    j["repos"] = nlohmann::json::array();
    j["repos"].push_back({{"name", "calculator"},
                          {"path", (fixtures_dir() / "calculator").string()},
                          {"test_command", "python3 run_tests.py"}});
    auto cfg = load_config_json(dir, j);

    ApproxTokenizer tok;
    auto words = [](const char* stem, size_t count) {
        std::string out;
        for (size_t i = 0; i < count; ++i) {
            if (i) out += " ";
            out += std::string(stem) + std::to_string(i);
        }
        return out;
    };
    std::string tasks_jsonl;
    size_t middles[] = {2, 13, 150};
    for (size_t i = 0; i < 3; ++i) {
        artifact::TaskRecord rec;
        rec.task.task_id = "s" + std::to_string(i);
        rec.task.repo_id = "calculator";
        rec.task.file_path = "calculator.py";
        rec.task.level = MaskLevel::Expression;
        rec.task.prefix = words("p", i + 1); // 1, 2, 3 tokens
        rec.task.middle = words("m", middles[i]);
        rec.task.suffix = "tail end"; // 2 tokens
        rec.task.middle_token_count = tok.count(rec.task.middle);
        rec.tests_cmd = "python3 run_tests.py";
        rec.context_tokens = 10 * (i + 1); // 10, 20, 30
        tasks_jsonl += artifact::task_to_json(rec).dump() + "\n";
    }
    ArtifactPaths paths{cfg.out_dir};
    write_file(paths.tasks(), tasks_jsonl);
    stage_stats(cfg);

    auto parsed = nlohmann::json::parse(read_file_or_throw(paths.stats_json()));
    std::string middle_cell, context_cell, prefix_cell, suffix_cell;
    bool ok = parsed["rows"].is_array() && parsed["rows"].size() == 1;
    if (ok) {
        const auto& row = parsed["rows"][0];
        middle_cell = row["middle_tokens"]["cell"];
        context_cell = row["context_tokens"]["cell"];
        prefix_cell = row["prefix_tokens"]["cell"];
        suffix_cell = row["suffix_tokens"]["cell"];
        ok = row["category"] == "expression" && row["samples"] == 3 &&
             middle_cell == "2/150/55.0" &&  // hand: min 2, max 150, mean 55.0
             context_cell == "10/30/20.0" && // hand: 10, 30, mean 20.0
             prefix_cell == "1/3/2.0" &&     // hand: 1, 2, 3 prefix tokens
             suffix_cell == "2/2/2.0";       // constant 2 tokens
    }
    std::ostringstream detail;
    detail << "middle=" << middle_cell << " context=" << context_cell << " prefix=" << prefix_cell
           << " suffix=" << suffix_cell;
    report(9, "stats reporting", ok, detail.str());
}

// --- criterion 10: end-to-end determinism ---

nlohmann::json determinism_config(const fs::path& dir, const fs::path& out_dir) {
    nlohmann::json j;
    j["seed"] = 21;
    j["out_dir"] = out_dir.string();
    j["repos"] = nlohmann::json::array();
    for (const char* repo : {"calculator", "bank"}) {
        j["repos"].push_back({{"name", repo},
                              {"path", (fixtures_dir() / repo).string()},
                              {"test_command", "python3 run_tests.py"}});
    }
    j["mask"] = {{"levels", {"expression", "statement", "random_span", "random_multi_line"}},
                 {"tasks_per_file", 2}};
    j["sandbox"] = {{"timeout_seconds", 60}, {"workers", 2}};
    write_file(dir / "qa.jsonl",
               R"({"query": "name the metric", "answer": "pass@k", "language": "python"})"
               "\n");
    j["corpus"] = {{"completion_weight", 0.5}, {"qa_path", (dir / "qa.jsonl").string()}};
    return j;
}

void criterion_determinism() {
    std::vector<std::map<std::string, uint64_t>> hashes;
    for (int run = 0; run < 2; ++run) {
        auto dir = make_temp_dir("deterministic-" + std::to_string(run));
        auto cfg = load_config_json(dir, determinism_config(dir, dir / "out"));
        StageOptions options;
        options.endpoint = "oracle";
        int rc = run_pipeline(
            cfg, {"ingest", "generate", "evaluate", "report", "corpus", "stats"}, options);
        if (rc != 0) {
            report(10, "end-to-end determinism", false,
                   "pipeline run " + std::to_string(run) + " exited " + std::to_string(rc));
            return;
        }
        ArtifactPaths paths{cfg.out_dir};
        std::map<std::string, uint64_t> h;
        h["tasks"] = hash_file_bytes(paths.tasks());
        h["corpus"] = hash_file_bytes(paths.corpus());
        h["report.txt"] = hash_file_bytes(paths.report("oracle", "txt"));
        h["report.json"] = hash_file_bytes(paths.report("oracle", "json"));
        h["report.csv"] = hash_file_bytes(paths.report("oracle", "csv"));
        h["stats"] = hash_file_bytes(paths.stats_txt());
        hashes.push_back(std::move(h));
    }
    std::vector<std::string> diffs;
    for (const auto& [name, value] : hashes[0])
        if (hashes[1].at(name) != value) diffs.push_back(name);
    bool ok = diffs.empty();
    std::ostringstream detail;
    if (ok) {
        detail << "two pipeline runs produced hash-identical tasks, corpus, reports and stats";
    } else {
        detail << "artifacts differ:";
        for (const auto& d : diffs) detail << " " << d;
    }
    report(10, "end-to-end determinism", ok, detail.str());
}

} // namespace

int main() {
    std::printf("repofim acceptance suite\n");
    auto set = build_benchmark();
    criterion_round_trip(set);
    criterion_grammar_soundness(set);
    criterion_oracle_eval(set);
    criterion_timeout(set);
    criterion_pass_at_k();
    criterion_edit_similarity();
    criterion_decontamination(set);
    criterion_budget_safety();
    criterion_stats();
    criterion_determinism();
    if (g_failures == 0)
        std::printf("all 10 acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria FAILED\n", g_failures);
    return g_failures;
}
